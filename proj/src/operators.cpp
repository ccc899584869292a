#include "ahlfors/operators.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace ahlfors {

const char* to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::J: return "J";
    case OperatorKind::I: return "I";
    case OperatorKind::D: return "D";
    case OperatorKind::composite: return "resolvent_composite";
    case OperatorKind::residual: return "residual";
  }
  return "unknown";
}

namespace {

void require_kind(const PotentialKernel& k, KernelKind kind, const char* op) {
  if (k.kind != kind)
    fail(ErrorCode::invalid_argument, std::string(op) + " needs a " + to_string(kind) + " kernel");
}

void require_size(const PotentialKernel& k, const GridFunction& f) {
  if (f.size() != k.size()) fail(ErrorCode::invalid_argument, "dimension mismatch");
}

std::string provenance(const PotentialKernel& k) {
  std::ostringstream s;
  s << to_string(k.kind) << " alpha=" << k.alpha << " scales=" << k.grid.size() << " t=["
    << k.grid.t_min() << "," << k.grid.t_max() << "] " << k.space->description();
  return s.str();
}

// Missing input entries contribute nothing; output rows outside the kernel's
// guard are missing.
Vector filled(const GridFunction& f) {
  Vector v = f.values;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (!f.is_valid(i)) v[static_cast<Eigen::Index>(i)] = 0.0;
  return v;
}

double weighted_norm(const Vector& v, const Vector& w, double p) {
  if (std::isinf(p)) return v.cwiseAbs().maxCoeff();
  return std::pow((v.cwiseAbs().array().pow(p) * w.array()).sum(), 1.0 / p);
}

Matrix submatrix(const Matrix& A, const std::vector<std::size_t>& idx) {
  const auto m = static_cast<Eigen::Index>(idx.size());
  Matrix out(m, m);
  for (Eigen::Index j = 0; j < m; ++j)
    for (Eigen::Index i = 0; i < m; ++i)
      out(i, j) = A(static_cast<Eigen::Index>(idx[static_cast<std::size_t>(i)]),
                    static_cast<Eigen::Index>(idx[static_cast<std::size_t>(j)]));
  return out;
}

}  // namespace

OperatorMatrix bessel_operator(const PotentialKernel& k) {
  require_kind(k, KernelKind::bessel, "bessel_operator");
  return {OperatorKind::J, k.alpha, k.matrix * k.space->weights().asDiagonal(), k.row_valid,
          provenance(k)};
}

OperatorMatrix riesz_operator(const PotentialKernel& k) {
  require_kind(k, KernelKind::riesz, "riesz_operator");
  return {OperatorKind::I, k.alpha, k.matrix * k.space->weights().asDiagonal(), k.row_valid,
          provenance(k)};
}

OperatorMatrix frac_derivative_operator(const PotentialKernel& n) {
  require_kind(n, KernelKind::frac_deriv, "frac_derivative_operator");
  Matrix D = -(n.matrix * n.space->weights().asDiagonal());
  D.diagonal().setZero();
  // Diagonal = negated off-diagonal row sum, so D 1 = 0.
  D.diagonal() = -D.rowwise().sum();
  return {OperatorKind::D, n.alpha, std::move(D), n.row_valid, provenance(n)};
}

OperatorMatrix composite_operator(const OperatorMatrix& J, const OperatorMatrix& D) {
  if (J.kind != OperatorKind::J || D.kind != OperatorKind::D)
    fail(ErrorCode::invalid_argument, "composite needs (J, D)");
  if (J.matrix.rows() != D.matrix.rows()) fail(ErrorCode::invalid_argument, "dimension mismatch");
  Matrix C = J.matrix;
  C.noalias() += D.matrix * J.matrix;
  return {OperatorKind::composite, J.alpha, std::move(C), mask_and(J.row_valid, D.row_valid,
          static_cast<std::size_t>(J.matrix.rows())), "(I+D)J from " + J.provenance};
}

OperatorMatrix residual_operator(const OperatorMatrix& J, const OperatorMatrix& D) {
  OperatorMatrix R = composite_operator(J, D);
  R.matrix = Matrix::Identity(R.matrix.rows(), R.matrix.cols()) - R.matrix;
  R.kind = OperatorKind::residual;
  R.provenance = "I-(I+D)J from " + J.provenance;
  return R;
}

GridFunction apply_bessel(const PotentialKernel& k, const GridFunction& g) {
  require_kind(k, KernelKind::bessel, "apply_bessel");
  require_size(k, g);
  Vector out = k.matrix * filled(g).cwiseProduct(k.space->weights());
  return GridFunction(std::move(out), k.row_valid);
}

GridFunction apply_riesz(const PotentialKernel& k, const GridFunction& f) {
  require_kind(k, KernelKind::riesz, "apply_riesz");
  require_size(k, f);
  Vector out = k.matrix * filled(f).cwiseProduct(k.space->weights());
  return GridFunction(std::move(out), k.row_valid);
}

GridFunction apply_frac_derivative(const PotentialKernel& n, const GridFunction& f) {
  require_kind(n, KernelKind::frac_deriv, "apply_frac_derivative");
  require_size(n, f);
  const Vector fv = filled(f);
  const Vector& w = n.space->weights();
  // Summed as n(x,y) w(y) (f(x) - f(y)) so that constants give exactly zero.
  const Eigen::Index m = fv.size();
  Vector out = Vector::Zero(m);
  for (Eigen::Index j = 0; j < m; ++j)
    out.array() += n.matrix.col(j).array() * (w[j] * (fv.array() - fv[j]));
  return GridFunction(std::move(out), n.row_valid);
}

PropertyReport q_representation_check(const AICollection& ai, const PotentialKernel& kJ,
                                      const PotentialKernel& kD, const GridFunction& f,
                                      double tolerance) {
  require_kind(kJ, KernelKind::bessel, "q_representation_check");
  require_kind(kD, KernelKind::frac_deriv, "q_representation_check");
  require_size(kJ, f);
  require_size(kD, f);
  if (kJ.alpha != kD.alpha) fail(ErrorCode::invalid_argument, "kernels with different alpha");
  const ScaleGrid& grid = ai.grid();
  if (kJ.grid.size() != grid.size() || kJ.grid.t_min() != grid.t_min() ||
      kD.grid.size() != grid.size() || kD.grid.t_min() != grid.t_min())
    fail(ErrorCode::invalid_argument, "kernels were not built on this AI grid");
  const std::size_t n = kJ.size(), K = grid.size();
  if (K < 4) fail(ErrorCode::insufficient_scales, "Q representation needs >= 4 scales");
  const Vector fv = filled(f);
  for (std::size_t i = 0; i < n; ++i)
    if (fv[static_cast<Eigen::Index>(i)] != 0.0 && !(kJ.row_valid.empty() || kJ.row_valid[i]))
      fail(ErrorCode::guard_violation, "support of f leaves the guarded rows");

  const double a = kJ.alpha, eps = grid.log_step();
  Vector qJ = Vector::Zero(static_cast<Eigen::Index>(n)), qD = qJ;
  for (std::size_t k = 1; k + 1 < K; ++k) {
    const double wk = (k == 1 || k + 2 == K) ? eps / 2 : eps;
    const double t = grid.t(k);
    const Vector qf = ai.apply_q(k, fv);
    qJ += wk / (1.0 + std::pow(t, -a)) * qf;
    qD += wk * (1.0 + std::pow(t, -a)) * qf;
  }
  const Vector top = ai.apply_s(K - 2, fv);
  qJ += top;
  qD += (fv - ai.apply_s(1, fv)) + top;

  const Vector kernJ = apply_bessel(kJ, GridFunction(fv)).values;
  const Vector kernD = fv + apply_frac_derivative(kD, GridFunction(fv)).values;

  double eJ = 0, eD = 0, mJ = 0, mD = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(kJ.row_valid.empty() || kJ.row_valid[i])) continue;
    const auto e = static_cast<Eigen::Index>(i);
    eJ = std::max(eJ, std::abs(kernJ[e] - qJ[e]));
    eD = std::max(eD, std::abs(kernD[e] - qD[e]));
    mJ = std::max(mJ, std::abs(kernJ[e]));
    mD = std::max(mD, std::abs(kernD[e]));
  }
  PropertyReport rep;
  rep.name = "q_representation";
  rep.check_le("bessel_relative_residual", mJ > 0 ? eJ / mJ : 0.0, tolerance).detail = {
      {"log_step", eps}};
  rep.check_le("one_plus_derivative_relative_residual", mD > 0 ? eD / mD : 0.0, tolerance);
  return rep;
}

ContractionReport matrix_norm_estimate(const Matrix& R, const Vector& weights, double p,
                                       const ContractionOptions& opt) {
  if (R.rows() != R.cols() || R.rows() != weights.size())
    fail(ErrorCode::invalid_argument, "norm estimate needs a square matrix and matching weights");
  if (!(p > 1) || std::isinf(p)) fail(ErrorCode::invalid_argument, "norm estimate needs 1 < p < inf");
  ContractionReport rep;
  rep.p = p;
  rep.guarded_size = static_cast<std::size_t>(R.rows());
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal;
  const Eigen::Index m = R.rows();

  if (p == 2.0) {
    rep.method = "power_iteration";
    const Vector sw = weights.cwiseSqrt();
    const Matrix B = sw.asDiagonal() * R * sw.cwiseInverse().asDiagonal();
    Vector v(m);
    for (Eigen::Index i = 0; i < m; ++i) v[i] = normal(rng);
    v.normalize();
    double lambda = 0.0;
    for (std::size_t it = 1; it <= opt.max_iterations; ++it) {
      const Vector Bv = B * v;
      const Vector w = B.transpose() * Bv;
      const double next = v.dot(w);  // Rayleigh quotient of B^T B
      rep.iterations = it;
      if (next < lambda * (1.0 - 1e-12)) rep.rayleigh_monotone = false;
      rep.history.push_back(std::sqrt(std::max(next, 0.0)));
      const double nw = w.norm();
      if (nw == 0.0) {
        lambda = 0.0;
        rep.converged = true;
        break;
      }
      const bool done = it > 1 && std::abs(next - lambda) <= opt.rayleigh_tol * next;
      lambda = next;
      v = w / nw;
      if (done) {
        rep.converged = true;
        break;
      }
    }
    rep.estimate = std::sqrt(std::max(lambda, 0.0));
    return rep;
  }

  rep.method = "random_probe_lower_bound";
  double best = 0.0;
  for (std::size_t k = 0; k < std::max<std::size_t>(opt.probes, 64); ++k) {
    Vector v(m);
    for (Eigen::Index i = 0; i < m; ++i) v[i] = normal(rng);
    const double nv = weighted_norm(v, weights, p);
    if (nv == 0.0) continue;
    best = std::max(best, weighted_norm(R * v, weights, p) / nv);
    rep.history.push_back(best);
  }
  rep.iterations = rep.history.size();
  rep.converged = true;
  rep.estimate = best;
  return rep;
}

ContractionReport contraction_norm(const PotentialKernel& kJ, const PotentialKernel& kD, double p,
                                   const ContractionOptions& opt) {
  const OperatorMatrix J = bessel_operator(kJ);
  const OperatorMatrix D = frac_derivative_operator(kD);
  if (kJ.alpha != kD.alpha) fail(ErrorCode::invalid_argument, "kernels with different alpha");
  const OperatorMatrix R = residual_operator(J, D);
  const auto idx = mask_indices(R.row_valid, kJ.size());
  if (idx.empty()) fail(ErrorCode::insufficient_geometry, "no guarded rows");
  Vector w(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i)
    w[static_cast<Eigen::Index>(i)] = kJ.space->weight(idx[i]);
  ContractionReport rep = matrix_norm_estimate(submatrix(R.matrix, idx), w, p, opt);
  rep.alpha = kJ.alpha;
  return rep;
}

InversionResult invert_bessel(const PotentialKernel& kJ, const PotentialKernel& kD,
                              const GridFunction& f, double tol, std::size_t max_iterations) {
  require_size(kJ, f);
  if (!(tol > 0)) fail(ErrorCode::invalid_argument, "invert_bessel needs tol > 0");
  if (f.valid_count() != f.size()) fail(ErrorCode::invalid_argument, "invert_bessel needs f everywhere");
  if (!f.values.allFinite()) fail(ErrorCode::invalid_argument, "invert_bessel needs finite f");
  const OperatorMatrix J = bessel_operator(kJ);
  const OperatorMatrix D = frac_derivative_operator(kD);
  const OperatorMatrix R = residual_operator(J, D);
  const Vector& w = kJ.space->weights();

  const ContractionReport c = matrix_norm_estimate(R.matrix, w, 2.0);
  if (!(c.estimate < 1.0)) {
    std::ostringstream msg;
    msg << "||I-(I+D)J||_2 estimated at " << c.estimate;
    fail(ErrorCode::not_contractive, msg.str());
  }

  InversionResult out;
  out.contraction = c.estimate;
  Vector term = f.values + D.matrix * f.values;
  Vector g = term;
  for (std::size_t it = 1;; ++it) {
    term = R.matrix * term;
    g += term;
    const double inc = weighted_norm(term, w, 2.0);
    out.increments.push_back(inc);
    out.iterations = it;
    if (inc < tol) break;
    if (it >= max_iterations) {
      std::ostringstream msg;
      msg << "Neumann series stalled after " << it << " terms, last increment " << inc;
      fail(ErrorCode::non_convergence, msg.str());
    }
  }
  const Vector r = J.matrix * g - f.values;
  double acc = 0.0;
  for (std::size_t i = 0; i < kJ.size(); ++i)
    if (kJ.row_valid.empty() || kJ.row_valid[i])
      acc += r[static_cast<Eigen::Index>(i)] * r[static_cast<Eigen::Index>(i)] * w[static_cast<Eigen::Index>(i)];
  out.residual = std::sqrt(acc);
  out.g = GridFunction(std::move(g));
  return out;
}

PropertyReport t_alpha_v_kernel(const AICollection& ai, double alpha, double v, double delta,
                                const TavOptions& opt) {
  if (!(alpha > 0)) fail(ErrorCode::invalid_argument, "t_alpha_v needs alpha > 0");
  if (!(v > 0)) fail(ErrorCode::invalid_argument, "t_alpha_v needs v > 0");
  if (!(delta > 0 && delta < 1)) fail(ErrorCode::invalid_argument, "t_alpha_v needs 0 < delta < 1");
  const MetricMeasureSpace& sp = ai.space();
  const ScaleGrid& grid = ai.grid();
  const double eps = grid.log_step();
  const double shift = std::log(v) / eps;
  const long m = std::lround(shift);
  if (std::abs(shift - static_cast<double>(m)) > 1e-6)
    fail(ErrorCode::insufficient_scales, "v is not a power of the grid ratio");
  const long K = static_cast<long>(grid.size());
  std::vector<std::size_t> us;
  for (long k = 1; k + 1 < K; ++k)
    if (k + m >= 1 && k + m + 1 < K) us.push_back(static_cast<std::size_t>(k));
  if (us.size() < 2 ||
      static_cast<double>(us.size() - 1) * eps < 2.0 * std::log(10.0) - 1e-9)
    fail(ErrorCode::insufficient_scales, "u and uv overlap on fewer than two decades");

  const std::size_t n = sp.size();
  auto uw = [&](std::size_t idx) { return (idx == 0 || idx + 1 == us.size()) ? eps / 2 : eps; };
  auto rho = [&](double t) { return 1.0 / (1.0 + std::pow(t, alpha)); };

  const Vector ones = Vector::Ones(static_cast<Eigen::Index>(n));
  Vector T1 = Vector::Zero(static_cast<Eigen::Index>(n)), Ts1 = T1;
  for (std::size_t a = 0; a < us.size(); ++a) {
    const std::size_t k = us[a], kv = static_cast<std::size_t>(static_cast<long>(k) + m);
    const double c = uw(a) * rho(grid.t(k) * v);
    T1 += c * ai.apply_q(k, ai.apply_q(kv, ones));
    Ts1 += c * ai.apply_q(kv, ai.apply_q(k, ones));
  }

  // Sampled rows: points guarded at unit scale (clamped to the grid), then
  // each one's nearest neighbour for the smoothness ratio.
  const double t_ref = std::clamp(1.0, grid.t_min(), grid.t_max());
  std::vector<std::size_t> cand;
  for (std::size_t i = 0; i < n; ++i)
    if (ai.guard().valid(i, t_ref)) cand.push_back(i);
  if (cand.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (sp.boundary_distance(i) > sp.boundary_distance(best)) best = i;
    cand.push_back(best);
  }
  std::vector<std::size_t> rows;
  for (std::size_t k = 0; k < std::min(opt.sample_rows, cand.size()); ++k)
    rows.push_back(cand[k * cand.size() / std::min(opt.sample_rows, cand.size())]);

  auto n_row = [&](std::size_t x) {
    Vector out = Vector::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t a = 0; a < us.size(); ++a) {
      const std::size_t k = us[a], kv = static_cast<std::size_t>(static_cast<long>(k) + m);
      const Vector qx = (ai.s(k - 1).row(x) - ai.s(k + 1).row(x)) / (2 * eps);
      out += uw(a) * rho(grid.t(k) * v) * ai.apply_q(kv, qx);
    }
    return out;
  };

  const double vfac = std::pow(std::min(v, 1.0 / v), delta);
  const double N = sp.dim();
  const double u_max = grid.t(us.back());
  double bound = 0.0, smooth = 0.0, outside = 0.0;
  std::size_t outside_pairs = 0;
  for (std::size_t x : rows) {
    const Vector dx = sp.distance_row(x);
    std::size_t xp = x;
    double d0 = kInf;
    for (Eigen::Index j = 0; j < dx.size(); ++j)
      if (static_cast<std::size_t>(j) != x && dx[j] < d0) {
        d0 = dx[j];
        xp = static_cast<std::size_t>(j);
      }
    const Vector Nx = n_row(x), Nxp = n_row(xp);
    for (Eigen::Index z = 0; z < dx.size(); ++z) {
      const double d = dx[z];
      if (static_cast<std::size_t>(z) == x) continue;
      bound = std::max(bound, std::abs(Nx[z]) * std::pow(d, N) / vfac);
      if (d > 3 * d0)
        smooth = std::max(smooth, std::abs(Nx[z] - Nxp[z]) * std::pow(d, N + 1 - delta) /
                                      std::pow(d0, 1 - delta) / vfac);
      // q_u reaches 4 u e^eps, so N reaches 4 e^eps u (1 + v).
      if (d > 4 * std::exp(eps) * u_max * (v + 1)) {
        outside = std::max(outside, std::abs(Nx[z]));
        ++outside_pairs;
      }
    }
  }

  PropertyReport rep;
  rep.name = "t_alpha_v";
  rep.check_le("T1_zero", T1.cwiseAbs().maxCoeff(), opt.zero_tol);
  rep.check_le("Tstar1_zero", Ts1.cwiseAbs().maxCoeff(), opt.zero_tol);
  auto& b = rep.check_le("size_bound_constant", bound, kInf);
  b.pass = std::isfinite(bound) && bound > 0;
  b.detail = {{"v", v}, {"delta", delta}, {"alpha", alpha},
              {"u_scales", static_cast<double>(us.size())}, {"rows", static_cast<double>(rows.size())}};
  rep.check_le("smoothness_constant", smooth, kInf).pass = std::isfinite(smooth);
  rep.check_le("support_outside_max", outside, 1e-10).detail = {
      {"pairs", static_cast<double>(outside_pairs)}};
  return rep;
}

}  // namespace ahlfors
