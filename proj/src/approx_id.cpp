#include "ahlfors/approx_id.hpp"

#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ahlfors {

double BumpProfile::value(double r) {
  if (r <= plateau) return 1.0;
  if (r >= cutoff) return 0.0;
  const double u = (r - plateau) / (cutoff - plateau);
  return 1.0 - u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
}

double BumpProfile::derivative(double r) {
  if (r <= plateau || r >= cutoff) return 0.0;
  const double u = (r - plateau) / (cutoff - plateau);
  return -30.0 * u * u * (1.0 - u) * (1.0 - u) / (cutoff - plateau);
}

ScaleGrid::ScaleGrid(double t_min, double log_step, std::size_t count) : eps_(log_step) {
  if (!(t_min > 0) || !(log_step > 0) || count < 2)
    fail(ErrorCode::insufficient_scales, "scale grid needs t_min > 0, log_step > 0, >= 2 scales");
  t_.resize(count);
  for (std::size_t k = 0; k < count; ++k) t_[k] = t_min * std::exp(log_step * static_cast<double>(k));
}

ScaleGrid ScaleGrid::log_spaced(double t_min, double t_max, double points_per_decade) {
  if (!(t_min > 0) || !(t_max > t_min) || !(points_per_decade > 0))
    fail(ErrorCode::invalid_argument, "log_spaced needs 0 < t_min < t_max and density > 0");
  const auto intervals = static_cast<std::size_t>(
      std::max(1.0, std::ceil(points_per_decade * std::log10(t_max / t_min) - 1e-9)));
  ScaleGrid g(t_min, std::log(t_max / t_min) / static_cast<double>(intervals), intervals + 1);
  g.t_.back() = t_max;
  return g;
}

ScaleGrid ScaleGrid::octave_aligned(double t_min, double t_max, int steps_per_octave) {
  if (!(t_min > 0) || !(t_max > t_min) || steps_per_octave < 1)
    fail(ErrorCode::invalid_argument, "octave_aligned needs 0 < t_min < t_max, steps >= 1");
  const double eps = std::log(2.0) / steps_per_octave;
  const auto intervals = static_cast<std::size_t>(std::ceil(std::log(t_max / t_min) / eps - 1e-9));
  return ScaleGrid(t_min, eps, intervals + 1);
}

double ScaleGrid::trapezoid_weight(std::size_t k) const {
  return (k == 0 || k + 1 == t_.size()) ? eps_ / 2 : eps_;
}

std::optional<std::size_t> ScaleGrid::index_of(double t) const {
  if (t_.empty() || !(t > 0)) return std::nullopt;
  const double x = std::log(t / t_.front()) / eps_;
  const double k = std::round(x);
  if (k < 0 || k >= static_cast<double>(t_.size())) return std::nullopt;
  const auto idx = static_cast<std::size_t>(k);
  if (std::abs(t_[idx] - t) > 1e-9 * t) return std::nullopt;
  return idx;
}

ScaleGrid default_scale_grid(const MetricMeasureSpace& space, double points_per_decade) {
  const double t_min = std::min(space.resolution(), space.min_separation()) / 4.0;
  const double t_max = 2.5 * space.diameter();
  return ScaleGrid::log_spaced(t_min, t_max, points_per_decade);
}

// ---------------------------------------------------------------------------

ScaleKernel::ScaleKernel(Matrix dense) : dense_(true), dense_mat_(std::move(dense)) {}
ScaleKernel::ScaleKernel(Sparse sparse) : dense_(false), sparse_mat_(std::move(sparse)) {}

std::size_t ScaleKernel::size() const {
  return static_cast<std::size_t>(dense_ ? dense_mat_.rows() : sparse_mat_.rows());
}

std::size_t ScaleKernel::nonzeros() const {
  return dense_ ? static_cast<std::size_t>(dense_mat_.size())
                : static_cast<std::size_t>(sparse_mat_.nonZeros());
}

double ScaleKernel::coeff(std::size_t i, std::size_t j) const {
  const auto r = static_cast<Eigen::Index>(i), c = static_cast<Eigen::Index>(j);
  return dense_ ? dense_mat_(r, c) : sparse_mat_.coeff(r, c);
}

Vector ScaleKernel::row(std::size_t i) const {
  if (dense_) return dense_mat_.row(static_cast<Eigen::Index>(i)).transpose();
  Vector v = Vector::Zero(sparse_mat_.cols());
  for (Sparse::InnerIterator it(sparse_mat_, static_cast<Eigen::Index>(i)); it; ++it)
    v[it.col()] = it.value();
  return v;
}

Vector ScaleKernel::apply(const Vector& v) const {
  return dense_ ? Vector(dense_mat_ * v) : Vector(sparse_mat_ * v);
}

void ScaleKernel::add_to(Matrix& acc, double c) const {
  if (dense_) {
    acc.noalias() += c * dense_mat_;
    return;
  }
  for (Eigen::Index i = 0; i < sparse_mat_.outerSize(); ++i)
    for (Sparse::InnerIterator it(sparse_mat_, i); it; ++it) acc(i, it.col()) += c * it.value();
}

double ScaleKernel::max_abs() const {
  if (dense_) return dense_mat_.size() ? dense_mat_.cwiseAbs().maxCoeff() : 0.0;
  double m = 0.0;
  for (Eigen::Index k = 0; k < sparse_mat_.nonZeros(); ++k)
    m = std::max(m, std::abs(sparse_mat_.valuePtr()[k]));
  return m;
}

double ScaleKernel::max_asymmetry() const {
  if (dense_) return dense_mat_.size() ? (dense_mat_ - dense_mat_.transpose()).cwiseAbs().maxCoeff() : 0.0;
  const Sparse diff = sparse_mat_ - Sparse(sparse_mat_.transpose());
  double m = 0.0;
  for (Eigen::Index k = 0; k < diff.nonZeros(); ++k) m = std::max(m, std::abs(diff.valuePtr()[k]));
  return m;
}

Matrix ScaleKernel::to_dense() const { return dense_ ? dense_mat_ : Matrix(sparse_mat_); }

ScaleKernel ScaleKernel::combine(const ScaleKernel& A, double a, const ScaleKernel& B, double b) {
  if (A.size() != B.size()) fail(ErrorCode::invalid_argument, "kernel size mismatch");
  if (!A.dense_ && !B.dense_) return ScaleKernel(Sparse(a * A.sparse_mat_ + b * B.sparse_mat_));
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(A.size()), static_cast<Eigen::Index>(A.size()));
  A.add_to(out, a);
  B.add_to(out, b);
  return ScaleKernel(std::move(out));
}

// ---------------------------------------------------------------------------

Vector t_operator(const MetricMeasureSpace& space, double t, const Vector& f) {
  if (static_cast<std::size_t>(f.size()) != space.size())
    fail(ErrorCode::invalid_argument, "function size mismatch");
  if (!(t > 0)) fail(ErrorCode::invalid_argument, "t_operator needs t > 0");
  const std::size_t n = space.size();
  const double inv_tn = std::pow(t, -space.dim());
  Vector out(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = space.dist(i, j);
      if (d < BumpProfile::cutoff * t)
        acc += BumpProfile::value(d / t) * f[static_cast<Eigen::Index>(j)] * space.weight(j);
    }
    out[static_cast<Eigen::Index>(i)] = inv_tn * acc;
  }
  return out;
}

AICollection::AICollection(SpacePtr space, ScaleGrid grid, AIOptions options)
    : space_(std::move(space)), grid_(std::move(grid)), guard_(space_, options.margin_factor) {
  if (grid_.size() < 3) fail(ErrorCode::insufficient_scales, "AI collection needs >= 3 scales");
  s_.resize(grid_.size());
  phi_.resize(grid_.size());
  psi_.resize(grid_.size());
  detail::parallel_for(grid_.size(), [&](std::size_t k) { build_scale(k, options); });
}

void AICollection::build_scale(std::size_t k, const AIOptions& options) {
  const MetricMeasureSpace& sp = *space_;
  const auto n = static_cast<Eigen::Index>(sp.size());
  const double t = grid_.t(k);
  const double inv_tn = std::pow(t, -sp.dim());
  const double reach = BumpProfile::cutoff * t;
  const Vector& w = sp.weights();

  auto degenerate = [&](const Vector& v, const char* what) {
    for (Eigen::Index i = 0; i < n; ++i)
      if (!std::isfinite(v[i]) || !(v[i] > 0)) {
        std::ostringstream msg;
        msg << what << " not finite at x=" << i << ", t=" << t;
        fail(ErrorCode::degenerate_scale, msg.str());
      }
  };

  std::size_t pairs = 0;
  std::vector<std::vector<std::pair<Eigen::Index, double>>> nbrs(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector drow = sp.distance_row(static_cast<std::size_t>(i));
    auto& list = nbrs[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < n; ++j)
      if (drow[j] < reach) list.emplace_back(j, inv_tn * BumpProfile::value(drow[j] / t));
    pairs += list.size();
  }
  const bool dense = static_cast<double>(pairs) > options.dense_threshold * static_cast<double>(n) *
                                                       static_cast<double>(n);

  if (dense) {
    Matrix H = Matrix::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (const auto& [j, v] : nbrs[static_cast<std::size_t>(i)]) H(i, j) = v;
    nbrs.clear();
    Vector phi = (H * w).cwiseInverse();
    degenerate(phi, "phi");
    Vector psi = (H * phi.cwiseProduct(w)).cwiseInverse();
    degenerate(psi, "psi");
    H *= psi.cwiseProduct(w).cwiseSqrt().asDiagonal();
    Matrix s = Matrix::Zero(n, n);
    s.selfadjointView<Eigen::Lower>().rankUpdate(H);
    H.resize(0, 0);
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = j; i < n; ++i) {
        const double v = s(i, j) * (phi[i] * phi[j]);
        s(i, j) = v;
        s(j, i) = v;
      }
    s_[k] = ScaleKernel(std::move(s));
    phi_[k] = std::move(phi);
    psi_[k] = std::move(psi);
    return;
  }

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(pairs);
  for (Eigen::Index i = 0; i < n; ++i)
    for (const auto& [j, v] : nbrs[static_cast<std::size_t>(i)]) trip.emplace_back(i, j, v);
  nbrs.clear();
  ScaleKernel::Sparse H(n, n);
  H.setFromTriplets(trip.begin(), trip.end());
  trip.clear();
  Vector phi = (H * w).cwiseInverse();
  degenerate(phi, "phi");
  Vector psi = (H * phi.cwiseProduct(w)).cwiseInverse();
  degenerate(psi, "psi");
  const Vector c = psi.cwiseProduct(w).cwiseSqrt();
  for (Eigen::Index i = 0; i < H.outerSize(); ++i)
    for (ScaleKernel::Sparse::InnerIterator it(H, i); it; ++it) it.valueRef() *= c[it.col()];
  ScaleKernel::Sparse Ht = H.transpose();
  ScaleKernel::Sparse s = H * Ht;
  for (Eigen::Index i = 0; i < s.outerSize(); ++i)
    for (ScaleKernel::Sparse::InnerIterator it(s, i); it; ++it)
      it.valueRef() *= phi[i] * phi[it.col()];
  s.makeCompressed();
  s_[k] = ScaleKernel(std::move(s));
  phi_[k] = std::move(phi);
  psi_[k] = std::move(psi);
}

Vector AICollection::apply_s(std::size_t k, const Vector& f) const {
  if (k >= scale_count()) fail(ErrorCode::invalid_argument, "scale index out of range");
  if (static_cast<std::size_t>(f.size()) != space_->size())
    fail(ErrorCode::invalid_argument, "function size mismatch");
  return s_[k].apply(f.cwiseProduct(space_->weights()));
}

Vector AICollection::apply_q(std::size_t k, const Vector& f) const {
  if (k == 0 || k + 1 >= scale_count())
    fail(ErrorCode::boundary_scale, "q needs both log-neighbours of t on the grid");
  const double e2 = 2.0 * grid_.log_step();
  return (apply_s(k - 1, f) - apply_s(k + 1, f)) / e2;
}

ScaleKernel AICollection::q(std::size_t k) const {
  if (k == 0 || k + 1 >= scale_count())
    fail(ErrorCode::boundary_scale, "q needs both log-neighbours of t on the grid");
  const double e2 = 2.0 * grid_.log_step();
  return ScaleKernel::combine(s_[k + 1], -1.0 / e2, s_[k - 1], 1.0 / e2);
}

std::size_t AICollection::memory_entries() const {
  std::size_t m = 0;
  for (const auto& s : s_) m += s.is_dense() ? s.nonzeros() : 2 * s.nonzeros();
  return m + 2 * space_->size() * scale_count();
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::size_t> sample_rows(const std::vector<std::size_t>& rows, std::size_t max_count) {
  if (rows.size() <= max_count) return rows;
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < max_count; ++k) out.push_back(rows[k * rows.size() / max_count]);
  return out;
}

std::size_t most_interior_point(const MetricMeasureSpace& sp) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < sp.size(); ++i)
    if (sp.boundary_distance(i) > sp.boundary_distance(best)) best = i;
  return best;
}

Vector tent(const MetricMeasureSpace& sp, std::size_t center, double radius) {
  const Vector d = sp.distance_row(center);
  return (1.0 - d.array() / radius).max(0.0).matrix();
}

double ratio_of_extremes(const std::vector<double>& v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  return *hi / *lo;
}

}  // namespace

PropertyReport verify_ai_properties(const AICollection& ai, const AIVerifyOptions& opt) {
  const MetricMeasureSpace& sp = ai.space();
  const std::size_t n = sp.size(), K = ai.scale_count();
  const double N = sp.dim();
  const Vector ones = Vector::Ones(static_cast<Eigen::Index>(n));
  const double eps = ai.grid().log_step();

  double norm_err = 0.0, sym = 0.0, q_sym = 0.0, support_violations = 0.0, q_support_violations = 0.0;
  double q1_err = 0.0, min_s = kInf, max_l1 = 0.0, phi_min = kInf, psi_min = kInf;
  std::vector<double> c_up, c_low, c_lip, c_q;
  std::size_t flagged = 0, examined = 0;

  for (std::size_t k = 0; k < K; ++k) {
    const double t = ai.t(k), tn = std::pow(t, N);
    const ScaleKernel& s = ai.s(k);
    sym = std::max(sym, tn * s.max_asymmetry());
    phi_min = std::min(phi_min, ai.phi(k).minCoeff());
    psi_min = std::min(psi_min, ai.psi(k).minCoeff());
    const Vector row_sums = ai.apply_s(k, ones);
    max_l1 = std::max(max_l1, row_sums.cwiseAbs().maxCoeff());

    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < n; ++i)
      if (ai.valid(i, k)) rows.push_back(i);
    for (std::size_t i : rows) {
      norm_err = std::max(norm_err, std::abs(row_sums[static_cast<Eigen::Index>(i)] - 1.0));
      s.for_each_in_row(i, [&](std::size_t j, double v) {
        min_s = std::min(min_s, v);
        if (v != 0.0 && sp.dist(i, j) > 4.0 * t) support_violations += 1;
      });
    }

    if (k > 0 && k + 1 < K) {
      const Vector q1 = ai.apply_q(k, ones);
      const ScaleKernel qk = ai.q(k);
      q_sym = std::max(q_sym, tn * qk.max_asymmetry());
      double cq = 0.0;
      bool any = false;
      for (std::size_t i = 0; i < n; ++i) {
        if (!ai.q_valid(i, k)) continue;
        any = true;
        q1_err = std::max(q1_err, std::abs(q1[static_cast<Eigen::Index>(i)]));
        qk.for_each_in_row(i, [&](std::size_t j, double v) {
          cq = std::max(cq, tn * std::abs(v));
          if (v != 0.0 && sp.dist(i, j) > 4.0 * t * std::exp(eps)) q_support_violations += 1;
        });
      }
      if (any && t >= opt.resolved_factor * sp.resolution()) c_q.push_back(cq);
    }

    if (rows.empty() || t < opt.resolved_factor * sp.resolution()) continue;
    const auto sampled = sample_rows(rows, 128);
    double up = 0.0, low = kInf, lip = 0.0;
    for (std::size_t i : sampled) {
      const Vector si = s.row(i);
      const Vector di = sp.distance_row(i);
      up = std::max(up, tn * si.maxCoeff());
      std::size_t nearest = i;
      double dn = kInf;
      for (Eigen::Index j = 0; j < si.size(); ++j) {
        if (di[j] < t / 4) low = std::min(low, tn * si[j]);
        if (static_cast<std::size_t>(j) != i && di[j] < dn) {
          dn = di[j];
          nearest = static_cast<std::size_t>(j);
        }
      }
      if (nearest != i)
        lip = std::max(lip, (si - s.row(nearest)).cwiseAbs().maxCoeff() * tn * t / dn);
      if (k > 0 && k + 1 < K) {
        const Vector fwd = (ai.s(k + 1).row(i) - si) / eps;
        const Vector bwd = (si - ai.s(k - 1).row(i)) / eps;
        const double scale = std::max(fwd.cwiseAbs().maxCoeff(), bwd.cwiseAbs().maxCoeff());
        ++examined;
        if (scale > 0 && (fwd - bwd).cwiseAbs().maxCoeff() > opt.derivative_disagreement * scale)
          ++flagged;
      }
    }
    c_up.push_back(up);
    c_low.push_back(low);
    c_lip.push_back(lip);
  }

  PropertyReport rep;
  rep.name = "ai_properties";
  rep.check_le("normalization_S1_minus_1", norm_err, opt.normalization_tol);
  rep.check_le("s_symmetry", sym, opt.symmetry_tol);
  rep.check_le("s_support_violations", support_violations, 0.0);
  rep.check_ge("s_nonnegative_min", min_s, 0.0);
  auto& pos = rep.check_ge("phi_psi_positive", std::min(phi_min, psi_min), 0.0);
  pos.pass = std::min(phi_min, psi_min) > 0 && std::isfinite(phi_min);
  rep.check_le("Lp_bound_max_row_mass", max_l1, 1.0 + opt.normalization_tol);

  const bool resolved = !c_up.empty();
  auto& up = rep.check_le("upper_bound_stability", resolved ? ratio_of_extremes(c_up) : kInf,
                          opt.stability_ratio);
  up.detail = {{"C", resolved ? *std::max_element(c_up.begin(), c_up.end()) : 0.0},
               {"resolved_scales", static_cast<double>(c_up.size())}};
  auto& lo = rep.check_le("lower_bound_stability", resolved ? ratio_of_extremes(c_low) : kInf,
                          opt.stability_ratio);
  lo.detail = {{"C_prime", resolved ? *std::min_element(c_low.begin(), c_low.end()) : 0.0}};
  if (resolved && *std::min_element(c_low.begin(), c_low.end()) <= 0) lo.pass = false;
  auto& lip = rep.check_le("lipschitz_stability", resolved ? ratio_of_extremes(c_lip) : kInf,
                           opt.stability_ratio);
  lip.detail = {{"C_double_prime", resolved ? *std::max_element(c_lip.begin(), c_lip.end()) : 0.0}};

  rep.check_le("Q1_zero", q1_err, opt.q_constants_tol);
  rep.check_le("q_symmetry", q_sym, opt.symmetry_tol);
  rep.check_le("q_support_violations", q_support_violations, 0.0);
  auto& qb = rep.check_le("q_upper_bound_stability", c_q.empty() ? kInf : ratio_of_extremes(c_q),
                          opt.stability_ratio);
  qb.detail = {{"C_q", c_q.empty() ? 0.0 : *std::max_element(c_q.begin(), c_q.end())}};

  // Pointwise convergence and Holder rate for a Lipschitz tent.
  const std::size_t xc = most_interior_point(sp);
  const Vector f = tent(sp, xc, 1.0);
  std::vector<double> lt, le;
  double err_small = kInf, err_ref = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double t = ai.t(k);
    const Vector e = ai.apply_s(k, f) - f;
    double sup = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < n; ++i)
      if (ai.valid(i, k)) {
        sup = std::max(sup, std::abs(e[static_cast<Eigen::Index>(i)]));
        any = true;
      }
    if (!any) continue;
    if (k == 0) err_small = sup;
    if (t >= opt.resolved_factor * sp.resolution() && t <= 0.5) {
      lt.push_back(std::log(t));
      le.push_back(std::log(sup));
      err_ref = std::max(err_ref, sup);
    }
  }
  rep.check_le("pointwise_convergence_small_t", err_small, err_ref > 0 ? err_ref : kInf)
      .detail = {{"error_at_t_min", err_small}};
  if (lt.size() >= 3) {
    const LineFit fit = fit_line(lt, le);
    rep.check_ge("holder_rate_slope", fit.slope, opt.holder_slope_min).detail = {
        {"scales", static_cast<double>(lt.size())}};
  } else {
    rep.check_ge("holder_rate_slope", std::numeric_limits<double>::quiet_NaN(), opt.holder_slope_min)
        .detail = {{"scales", static_cast<double>(lt.size())}};
  }

  // Decay of S_t f for a compactly supported bump at the largest guarded scales.
  const double bump_radius = 0.5;
  const Vector g = tent(sp, xc, bump_radius);
  std::vector<double> dt, dv;
  for (std::size_t k = 0; k < K; ++k) {
    const double t = ai.t(k);
    if (t < bump_radius) continue;
    const Vector sf = ai.apply_s(k, g);
    double sup = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < n; ++i)
      if (ai.valid(i, k)) {
        sup = std::max(sup, std::abs(sf[static_cast<Eigen::Index>(i)]));
        any = true;
      }
    if (!any) break;
    dt.push_back(std::log(t));
    dv.push_back(std::log(sup));
  }
  if (dt.size() >= 3) {
    bool monotone = true;
    for (std::size_t k = 1; k < dv.size(); ++k) monotone = monotone && dv[k] <= dv[k - 1] + 1e-12;
    const LineFit fit = fit_line(dt, dv);
    auto& d = rep.check_le("decay_slope_large_t", fit.slope, -N / 2);
    d.detail = {{"monotone", monotone ? 1.0 : 0.0}, {"scales", static_cast<double>(dt.size())}};
    d.pass = d.pass && monotone;
  } else {
    rep.check_le("decay_slope_large_t", std::numeric_limits<double>::quiet_NaN(), -N / 2)
        .detail = {{"scales", static_cast<double>(dt.size())}};
  }

  rep.info("time_derivative_flagged_fraction",
           examined ? static_cast<double>(flagged) / static_cast<double>(examined) : 0.0)
      .detail = {{"flagged", static_cast<double>(flagged)}, {"examined", static_cast<double>(examined)}};
  return rep;
}

PropertyReport calderon_residual(const AICollection& ai, const GridFunction& f, double tolerance) {
  const MetricMeasureSpace& sp = ai.space();
  const std::size_t n = sp.size(), K = ai.scale_count();
  if (f.size() != n) fail(ErrorCode::invalid_argument, "function size mismatch");
  if (K < 4) fail(ErrorCode::insufficient_scales, "Calderon check needs >= 4 scales");
  const std::size_t top = K - 1;
  Vector fv = f.values;
  for (std::size_t i = 0; i < n; ++i) {
    if (!f.is_valid(i)) {
      fv[static_cast<Eigen::Index>(i)] = 0.0;
      continue;
    }
    if (fv[static_cast<Eigen::Index>(i)] != 0.0 && !ai.valid(i, top))
      fail(ErrorCode::guard_violation, "support of f leaves the guard region at the top scale");
  }

  // Trapezoid in log t over the interior scales 1..K-2.
  const double eps = ai.grid().log_step();
  Vector sum_q = Vector::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t k = 1; k + 1 < K; ++k) {
    const double wk = (k == 1 || k + 2 == K) ? eps / 2 : eps;
    sum_q += wk * ai.apply_q(k, fv);
  }
  const Vector low = ai.apply_s(1, fv), high = ai.apply_s(K - 2, fv);
  const Vector recon = (fv - low) + sum_q + high;

  // Second pass through the same operator for the double formula.
  Vector sum_q2 = Vector::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t k = 1; k + 1 < K; ++k) {
    const double wk = (k == 1 || k + 2 == K) ? eps / 2 : eps;
    sum_q2 += wk * ai.apply_q(k, recon);
  }
  const Vector recon2 = (recon - ai.apply_s(1, recon)) + sum_q2 + ai.apply_s(K - 2, recon);

  double fmax = 0, r1 = 0, r2 = 0, raw = 0, tele = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!ai.valid(i, top)) continue;
    const auto e = static_cast<Eigen::Index>(i);
    fmax = std::max(fmax, std::abs(fv[e]));
    r1 = std::max(r1, std::abs(fv[e] - recon[e]));
    r2 = std::max(r2, std::abs(fv[e] - recon2[e]));
    raw = std::max(raw, std::abs(fv[e] - sum_q[e]));
    tele = std::max(tele, std::abs(low[e] - high[e] - sum_q[e]));
  }
  const double scale = fmax > 0 ? fmax : 1.0;

  PropertyReport rep;
  rep.name = "calderon_residual";
  rep.check_le("reproducing_residual", r1 / scale, tolerance).detail = {
      {"log_step", eps}, {"scales", static_cast<double>(K)}};
  rep.check_le("double_formula_residual", r2 / scale, 2 * tolerance);
  rep.info("telescoping_discrepancy", tele / scale);
  rep.info("residual_without_end_closures", raw / scale);
  return rep;
}

}  // namespace ahlfors
