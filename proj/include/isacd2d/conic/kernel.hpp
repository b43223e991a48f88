#pragma once

// Primal–dual interior-point kernel for standard-form cone programs
//
//   min  c·x − Σ_j ν_j ln x_j      s.t.  A x = b,  x ∈ R^f × R_+^l × Q^{q_1} × … × S_+^{s_1} × …
//   max  b·y + Σ_j ν_j (1 + ln s_j − ln ν_j)   s.t.  A^T y + s = c,  s ∈ {0}^f × K
//
// The log terms live on designated nonnegative coordinates and only move the
// central-path target on those coordinates from x·s = μ to x·s = ν + μ.
// Search directions use Nesterov–Todd scaling with a Mehrotra
// predictor–corrector; the reduced system is the m×m Schur complement,
// bordered by the free-variable columns when there are any.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "isacd2d/linalg.hpp"

namespace isacd2d::conic {

struct ToleranceSet {
  double primal = 1e-7;  // ‖Ax − b‖ / (1 + ‖b‖)
  double dual = 1e-7;    // ‖c − A^T y − s‖ / (1 + ‖c‖)
  double gap = 1e-7;     // (pobj − dobj) / (1 + |pobj| + |dobj|)
  int max_iterations = 200;
  double infeasibility = 1e-9;  // certificate residual threshold
  bool verbose = false;         // per-iteration trace on stderr
};

enum class SolveStatus { kOptimal, kPrimalInfeasible, kDualInfeasible, kMaxIterations, kNumericalFailure };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kPrimalInfeasible: return "primal-infeasible";
    case SolveStatus::kDualInfeasible: return "dual-infeasible";
    case SolveStatus::kMaxIterations: return "max-iter";
    case SolveStatus::kNumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

/// Absolute residual norms plus the relative versions used for stopping.
struct KktResiduals {
  double primal = 0.0;
  double dual = 0.0;
  double gap = 0.0;
  double primal_rel = 0.0;
  double dual_rel = 0.0;
  double gap_rel = 0.0;
};

namespace detail {

struct StandardForm {
  int m = 0;
  int n_free = 0;
  int n_lin = 0;
  std::vector<int> soc_dims;
  std::vector<int> psd_dims;
  RMat a_vec;  // m × n_vec; columns ordered [free | lin | soc_1 | soc_2 …]
  std::vector<std::vector<std::pair<int, RMat>>> a_psd;  // per block: (row, symmetric data)
  RVec c_vec;
  std::vector<RMat> c_psd;
  RVec b;
  RVec log_weight;  // length n_lin; zero for ordinary coordinates

  int n_soc_total() const {
    int n = 0;
    for (int d : soc_dims) n += d;
    return n;
  }
  int n_vec() const { return n_free + n_lin + n_soc_total(); }
  int lin_begin() const { return n_free; }
  int soc_begin() const { return n_free + n_lin; }
  double log_weight_sum() const { return log_weight.size() ? log_weight.sum() : 0.0; }
  /// Barrier degree: one per LP coordinate and SOC block, n per PSD block.
  int degree() const {
    int d = n_lin + static_cast<int>(soc_dims.size());
    for (int n : psd_dims) d += n;
    return d;
  }
};

/// An element of the variable space: vector part (all coordinates) plus PSD blocks.
struct ConeVec {
  RVec v;
  std::vector<RMat> mats;

  static ConeVec zeros(const StandardForm& sf) {
    ConeVec z;
    z.v = RVec::Zero(sf.n_vec());
    for (int n : sf.psd_dims) z.mats.push_back(RMat::Zero(n, n));
    return z;
  }
  ConeVec& axpy(double a, const ConeVec& o) {
    v += a * o.v;
    for (std::size_t i = 0; i < mats.size(); ++i) mats[i] += a * o.mats[i];
    return *this;
  }
  ConeVec operator-(const ConeVec& o) const {
    ConeVec r = *this;
    return r.axpy(-1.0, o);
  }
};

struct KernelPoint {
  ConeVec x;
  RVec y;
  ConeVec s;
};

struct KernelResult {
  SolveStatus status = SolveStatus::kNumericalFailure;
  KernelPoint point;
  int iterations = 0;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  KktResiduals residuals;
  double certificate_residual = std::numeric_limits<double>::quiet_NaN();
  double infeasibility_margin = std::numeric_limits<double>::quiet_NaN();
  RVec certificate_y;  // Farkas vector when primal infeasible
};

inline double frob_dot(const RMat& a, const RMat& b) { return (a.array() * b.array()).sum(); }

inline RVec apply_a(const StandardForm& sf, const ConeVec& x) {
  RVec r = sf.a_vec * x.v;
  for (std::size_t blk = 0; blk < sf.a_psd.size(); ++blk)
    for (const auto& [row, mat] : sf.a_psd[blk]) r(row) += frob_dot(mat, x.mats[blk]);
  return r;
}

inline ConeVec apply_at(const StandardForm& sf, const RVec& y) {
  ConeVec r;
  r.v = sf.a_vec.transpose() * y;
  r.mats.reserve(sf.psd_dims.size());
  for (std::size_t blk = 0; blk < sf.psd_dims.size(); ++blk) {
    RMat acc = RMat::Zero(sf.psd_dims[blk], sf.psd_dims[blk]);
    for (const auto& [row, mat] : sf.a_psd[blk]) acc += y(row) * mat;
    r.mats.push_back(std::move(acc));
  }
  return r;
}

/// ⟨x, s⟩ over the cone coordinates (free part excluded).
inline double cone_dot(const StandardForm& sf, const ConeVec& x, const ConeVec& s) {
  const int nc = sf.n_vec() - sf.n_free;
  double d = x.v.tail(nc).dot(s.v.tail(nc));
  for (std::size_t i = 0; i < x.mats.size(); ++i) d += frob_dot(x.mats[i], s.mats[i]);
  return d;
}

/// ⟨x, s⟩ with each log coordinate contributing |x_i s_i − ν_i| instead of x_i s_i.
/// Log pairs on opposite sides of their targets would otherwise cancel.
inline double complementarity(const StandardForm& sf, const ConeVec& x, const ConeVec& s) {
  double d = cone_dot(sf, x, s);
  for (int i = 0; i < sf.n_lin; ++i) {
    const double nu = sf.log_weight(i);
    if (nu == 0.0) continue;
    const double xs = x.v(sf.lin_begin() + i) * s.v(sf.lin_begin() + i);
    d += std::abs(xs - nu) - xs;
  }
  return d;
}

inline double full_norm(const ConeVec& x) {
  double n2 = x.v.squaredNorm();
  for (const auto& m : x.mats) n2 += m.squaredNorm();
  return std::sqrt(n2);
}

inline double objective_value(const StandardForm& sf, const ConeVec& x) {
  double v = sf.c_vec.dot(x.v);
  for (std::size_t i = 0; i < x.mats.size(); ++i) v += frob_dot(sf.c_psd[i], x.mats[i]);
  return v;
}

/// c·x − Σ ν ln x.
inline double primal_objective(const StandardForm& sf, const ConeVec& x) {
  double v = objective_value(sf, x);
  for (int j = 0; j < sf.n_lin; ++j) {
    const double w = sf.log_weight(j);
    if (w > 0.0) v -= w * std::log(std::max(x.v(sf.lin_begin() + j), 1e-300));
  }
  return v;
}

/// b·y + Σ ν (1 + ln s − ln ν).
inline double dual_objective(const StandardForm& sf, const RVec& y, const ConeVec& s) {
  double v = sf.b.dot(y);
  for (int j = 0; j < sf.n_lin; ++j) {
    const double w = sf.log_weight(j);
    if (w > 0.0) v += w * (1.0 + std::log(std::max(s.v(sf.lin_begin() + j), 1e-300)) - std::log(w));
  }
  return v;
}

inline KktResiduals compute_residuals(const StandardForm& sf, const KernelPoint& pt) {
  KktResiduals r;
  const RVec rp = sf.b - apply_a(sf, pt.x);
  ConeVec at = apply_at(sf, pt.y);
  double rd2 = 0.0;
  rd2 += (sf.c_vec - at.v - pt.s.v).squaredNorm();
  for (std::size_t i = 0; i < sf.psd_dims.size(); ++i)
    rd2 += (sf.c_psd[i] - at.mats[i] - pt.s.mats[i]).squaredNorm();
  double cnorm2 = sf.c_vec.squaredNorm();
  for (const auto& c : sf.c_psd) cnorm2 += c.squaredNorm();
  const double pobj = primal_objective(sf, pt.x);
  const double dobj = dual_objective(sf, pt.y, pt.s);
  r.primal = rp.norm();
  r.dual = std::sqrt(rd2);
  r.gap = std::abs(pobj - dobj);
  r.primal_rel = r.primal / (1.0 + sf.b.norm());
  r.dual_rel = r.dual / (1.0 + std::sqrt(cnorm2));
  r.gap_rel = r.gap / (1.0 + std::abs(pobj) + std::abs(dobj));
  return r;
}

// ---------------------------------------------------------------------------
// Nesterov–Todd scaling. Convention: W s = W^{-T} x = λ.

struct Scaling {
  RVec d;                    // LP: sqrt(x/s)
  std::vector<double> beta;  // SOC
  std::vector<RVec> v;       // SOC
  std::vector<RMat> r;       // PSD: W(u) = R^T u R
  std::vector<RMat> rti;     // PSD: R^{-T}
  RVec lam_vec;              // λ on LP + SOC coordinates (cone part only, offset by n_free)
  std::vector<RVec> lam_psd; // λ for PSD blocks (diagonal)
};

inline double jdot(const RVec& u, const RVec& w) { return u(0) * w(0) - u.tail(u.size() - 1).dot(w.tail(w.size() - 1)); }

inline RVec apply_j(RVec u) {
  u.tail(u.size() - 1) *= -1.0;
  return u;
}

inline bool compute_scaling(const StandardForm& sf, const ConeVec& x, const ConeVec& s, Scaling& sc) {
  const int lb = sf.lin_begin();
  sc.d = (x.v.segment(lb, sf.n_lin).array() / s.v.segment(lb, sf.n_lin).array()).sqrt();
  sc.lam_vec.resize(sf.n_vec() - sf.n_free);
  sc.lam_vec.head(sf.n_lin) = (x.v.segment(lb, sf.n_lin).array() * s.v.segment(lb, sf.n_lin).array()).sqrt();
  sc.beta.clear();
  sc.v.clear();
  int off = sf.soc_begin();
  int loff = sf.n_lin;
  for (int dim : sf.soc_dims) {
    const RVec xs = x.v.segment(off, dim);
    const RVec ss = s.v.segment(off, dim);
    const double xj = jdot(xs, xs), sj = jdot(ss, ss);
    if (!(xj > 0.0) || !(sj > 0.0) || xs(0) <= 0.0 || ss(0) <= 0.0) return false;
    const double aa = std::sqrt(xj), bb = std::sqrt(sj);
    const double beta = std::sqrt(aa / bb);
    const double cc = std::sqrt((xs.dot(ss) / aa / bb + 1.0) / 2.0);
    RVec v = (xs / aa + apply_j(ss) / bb) / (2.0 * cc);
    v(0) += 1.0;
    v /= std::sqrt(2.0 * v(0));
    sc.beta.push_back(beta);
    // λ = W s = β (2 v v^T − J) s
    sc.lam_vec.segment(loff, dim) = beta * (2.0 * v * v.dot(ss) - apply_j(ss));
    sc.v.push_back(std::move(v));
    off += dim;
    loff += dim;
  }
  sc.r.clear();
  sc.rti.clear();
  sc.lam_psd.clear();
  for (std::size_t i = 0; i < sf.psd_dims.size(); ++i) {
    Eigen::LLT<RMat> lx(x.mats[i]), ls(s.mats[i]);
    if (lx.info() != Eigen::Success || ls.info() != Eigen::Success) return false;
    const RMat lxm = lx.matrixL();
    const RMat lsm = ls.matrixL();
    Eigen::JacobiSVD<RMat> svd(lsm.transpose() * lxm, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const RVec lam = svd.singularValues();
    if (!(lam.minCoeff() > 0.0)) return false;
    const RVec isq = lam.array().rsqrt();
    sc.r.push_back(lxm * svd.matrixV() * isq.asDiagonal());
    sc.rti.push_back(lsm * svd.matrixU() * isq.asDiagonal());
    sc.lam_psd.push_back(lam);
  }
  return true;
}

/// W applied to a dual-space element (cone part).
inline ConeVec scale_w(const StandardForm& sf, const Scaling& sc, const ConeVec& u) {
  ConeVec r = ConeVec::zeros(sf);
  const int lb = sf.lin_begin();
  r.v.segment(lb, sf.n_lin) = sc.d.cwiseProduct(u.v.segment(lb, sf.n_lin));
  int off = sf.soc_begin();
  for (std::size_t q = 0; q < sf.soc_dims.size(); ++q) {
    const int dim = sf.soc_dims[q];
    const RVec us = u.v.segment(off, dim);
    r.v.segment(off, dim) = sc.beta[q] * (2.0 * sc.v[q] * sc.v[q].dot(us) - apply_j(us));
    off += dim;
  }
  for (std::size_t i = 0; i < sf.psd_dims.size(); ++i) r.mats[i] = sc.r[i].transpose() * u.mats[i] * sc.r[i];
  return r;
}

/// W^{-T} applied to a primal-space element.
inline ConeVec scale_winvt(const StandardForm& sf, const Scaling& sc, const ConeVec& u) {
  ConeVec r = ConeVec::zeros(sf);
  const int lb = sf.lin_begin();
  r.v.segment(lb, sf.n_lin) = u.v.segment(lb, sf.n_lin).cwiseQuotient(sc.d);
  int off = sf.soc_begin();
  for (std::size_t q = 0; q < sf.soc_dims.size(); ++q) {
    const int dim = sf.soc_dims[q];
    const RVec us = u.v.segment(off, dim);
    const RVec jv = apply_j(sc.v[q]);
    r.v.segment(off, dim) = (2.0 * jv * jv.dot(us) - apply_j(us)) / sc.beta[q];
    off += dim;
  }
  for (std::size_t i = 0; i < sf.psd_dims.size(); ++i)
    r.mats[i] = sc.rti[i].transpose() * u.mats[i] * sc.rti[i];
  return r;
}

/// W^T applied to a scaled-space element, landing in primal space.
inline ConeVec scale_wt(const StandardForm& sf, const Scaling& sc, const ConeVec& u) {
  ConeVec r = scale_w(sf, sc, u);  // LP and SOC scalings are symmetric
  for (std::size_t i = 0; i < sf.psd_dims.size(); ++i) r.mats[i] = sc.r[i] * u.mats[i] * sc.r[i].transpose();
  return r;
}

/// Q = W^T W (dual space → primal space).
inline ConeVec apply_q(const StandardForm& sf, const Scaling& sc, const ConeVec& u) {
  ConeVec r = scale_w(sf, sc, scale_w(sf, sc, u));
  for (std::size_t i = 0; i < sf.psd_dims.size(); ++i) {
    const RMat w = sc.r[i] * sc.r[i].transpose();
    r.mats[i] = w * u.mats[i] * w;
  }
  return r;
}

// Jordan algebra in the scaled space. Cone part only; free coordinates stay zero.

inline ConeVec jordan_prod(const StandardForm& sf, const ConeVec& a, const ConeVec& b) {
  ConeVec r = ConeVec::zeros(sf);
  const int lb = sf.lin_begin();
  r.v.segment(lb, sf.n_lin) = a.v.segment(lb, sf.n_lin).cwiseProduct(b.v.segment(lb, sf.n_lin));
  int off = sf.soc_begin();
  for (int dim : sf.soc_dims) {
    const RVec as = a.v.segment(off, dim), bs = b.v.segment(off, dim);
    r.v(off) = as.dot(bs);
    r.v.segment(off + 1, dim - 1) = as(0) * bs.tail(dim - 1) + bs(0) * as.tail(dim - 1);
    off += dim;
  }
  for (std::size_t i = 0; i < sf.psd_dims.size(); ++i) {
    const RMat ab = a.mats[i] * b.mats[i];
    r.mats[i] = 0.5 * (ab + ab.transpose());
  }
  return r;
}

inline ConeVec lambda_vec(const StandardForm& sf, const Scaling& sc) {
  ConeVec l = ConeVec::zeros(sf);
  l.v.tail(sf.n_vec() - sf.n_free) = sc.lam_vec;
  for (std::size_t i = 0; i < sf.psd_dims.size(); ++i) l.mats[i] = sc.lam_psd[i].asDiagonal();
  return l;
}

/// Solves λ ∘ u = r for u.
inline ConeVec lambda_div(const StandardForm& sf, const Scaling& sc, const ConeVec& rr) {
  ConeVec u = ConeVec::zeros(sf);
  const int lb = sf.lin_begin();
  u.v.segment(lb, sf.n_lin) = rr.v.segment(lb, sf.n_lin).cwiseQuotient(sc.lam_vec.head(sf.n_lin));
  int off = sf.soc_begin();
  int loff = sf.n_lin;
  for (int dim : sf.soc_dims) {
    const RVec l = sc.lam_vec.segment(loff, dim);
    const RVec r = rr.v.segment(off, dim);
    const double det = jdot(l, l);
    const double u0 = (l(0) * r(0) - l.tail(dim - 1).dot(r.tail(dim - 1))) / det;
    u.v(off) = u0;
    u.v.segment(off + 1, dim - 1) = (r.tail(dim - 1) - u0 * l.tail(dim - 1)) / l(0);
    off += dim;
    loff += dim;
  }
  for (std::size_t i = 0; i < sf.psd_dims.size(); ++i) {
    const RVec& lam = sc.lam_psd[i];
    const int n = static_cast<int>(lam.size());
    RMat m(n, n);
    for (int c = 0; c < n; ++c)
      for (int r = 0; r < n; ++r) m(r, c) = 2.0 * rr.mats[i](r, c) / (lam(r) + lam(c));
    u.mats[i] = m;
  }
  return u;
}

inline ConeVec identity(const StandardForm& sf) {
  ConeVec e = ConeVec::zeros(sf);
  e.v.segment(sf.lin_begin(), sf.n_lin).setOnes();
  int off = sf.soc_begin();
  for (int dim : sf.soc_dims) {
    e.v(off) = 1.0;
    off += dim;
  }
  for (std::size_t i = 0; i < sf.psd_dims.size(); ++i) e.mats[i].setIdentity();
  return e;
}

inline ConeVec log_target(const StandardForm& sf) {
  ConeVec t = ConeVec::zeros(sf);
  t.v.segment(sf.lin_begin(), sf.n_lin) = sf.log_weight;
  return t;
}

// ---------------------------------------------------------------------------
// Step lengths.

inline double max_step_soc(const RVec& x, const RVec& d) {
  const double a = jdot(d, d), b = jdot(x, d), c = jdot(x, x);
  const double inf = std::numeric_limits<double>::infinity();
  if (c <= 0.0) return 0.0;
  if (a == 0.0) return b < 0.0 ? -c / (2.0 * b) : inf;
  const double disc = b * b - a * c;
  if (a < 0.0) {
    const double sq = std::sqrt(std::max(disc, 0.0));
    return b <= 0.0 ? c / (-b + sq) : (-b - sq) / a;
  }
  if (b >= 0.0 || disc < 0.0) return inf;
  return c / (-b + std::sqrt(disc));
}

inline double max_step_psd(const RMat& x, const RMat& d) {
  Eigen::LLT<RMat> llt(x);
  if (llt.info() != Eigen::Success) return 0.0;
  const RMat l = llt.matrixL();
  RMat t = l.triangularView<Eigen::Lower>().solve(d);
  t = l.triangularView<Eigen::Lower>().solve(t.transpose().eval()).transpose().eval();
  t = (0.5 * (t + t.transpose())).eval();
  const double lmin = Eigen::SelfAdjointEigenSolver<RMat>(t, Eigen::EigenvaluesOnly).eigenvalues()(0);
  return lmin < 0.0 ? -1.0 / lmin : std::numeric_limits<double>::infinity();
}

inline double max_step(const StandardForm& sf, const ConeVec& x, const ConeVec& d) {
  double alpha = std::numeric_limits<double>::infinity();
  for (int j = sf.lin_begin(); j < sf.lin_begin() + sf.n_lin; ++j)
    if (d.v(j) < 0.0) alpha = std::min(alpha, -x.v(j) / d.v(j));
  int off = sf.soc_begin();
  for (int dim : sf.soc_dims) {
    alpha = std::min(alpha, max_step_soc(x.v.segment(off, dim), d.v.segment(off, dim)));
    off += dim;
  }
  for (std::size_t i = 0; i < sf.psd_dims.size(); ++i) alpha = std::min(alpha, max_step_psd(x.mats[i], d.mats[i]));
  return alpha;
}

/// Strict interior test in floating point: what the scaling step actually needs.
inline bool strictly_interior(const StandardForm& sf, const ConeVec& x) {
  for (int j = sf.lin_begin(); j < sf.lin_begin() + sf.n_lin; ++j)
    if (!(x.v(j) > 0.0)) return false;
  int off = sf.soc_begin();
  for (int dim : sf.soc_dims) {
    const RVec xs = x.v.segment(off, dim);
    if (!(xs(0) > 0.0) || !(jdot(xs, xs) > 0.0)) return false;
    off += dim;
  }
  for (const auto& m : x.mats)
    if (Eigen::LLT<RMat>(m).info() != Eigen::Success) return false;
  return true;
}

/// Halves `alpha` until x + alpha·d passes strictly_interior (at most 40 times).
inline double backtrack_to_interior(const StandardForm& sf, const ConeVec& x, const ConeVec& d, double alpha) {
  for (int k = 0; k < 40; ++k, alpha *= 0.5) {
    ConeVec t = x;
    t.axpy(alpha, d);
    if (strictly_interior(sf, t)) return alpha;
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Newton system.

class NewtonSolver {
 public:
  NewtonSolver(const StandardForm& sf, const Scaling& sc) : sf_(sf), sc_(sc) {}

  bool factor() {
    const int m = sf_.m;
    const int nf = sf_.n_free;
    RMat mm = RMat::Zero(m, m);
    const int lb = sf_.lin_begin();
    if (sf_.n_lin > 0) {
      const RMat al = sf_.a_vec.middleCols(lb, sf_.n_lin);
      mm.noalias() += al * sc_.d.array().square().matrix().asDiagonal() * al.transpose();
    }
    int off = sf_.soc_begin();
    for (std::size_t q = 0; q < sf_.soc_dims.size(); ++q) {
      const int dim = sf_.soc_dims[q];
      RMat w = 2.0 * sc_.v[q] * sc_.v[q].transpose();
      w(0, 0) -= 1.0;
      for (int i = 1; i < dim; ++i) w(i, i) += 1.0;
      w *= sc_.beta[q];
      const RMat as = sf_.a_vec.middleCols(off, dim);
      mm.noalias() += as * (w * w) * as.transpose();
      off += dim;
    }
    for (std::size_t blk = 0; blk < sf_.psd_dims.size(); ++blk) {
      const RMat w = sc_.r[blk] * sc_.r[blk].transpose();
      const auto& terms = sf_.a_psd[blk];
      for (std::size_t i = 0; i < terms.size(); ++i) {
        const RMat t = w * terms[i].second * w;
        for (std::size_t j = i; j < terms.size(); ++j) {
          const double v = frob_dot(terms[j].second, t);
          mm(terms[i].first, terms[j].first) += v;
          if (j != i) mm(terms[j].first, terms[i].first) += v;
        }
      }
    }
    mm = (0.5 * (mm + mm.transpose())).eval();
    const double reg = 1e-15 * std::max(1.0, mm.diagonal().cwiseAbs().maxCoeff());
    mm.diagonal().array() += reg;
    kkt_ = RMat::Zero(m + nf, m + nf);
    kkt_.topLeftCorner(m, m) = mm;
    if (nf > 0) {
      kkt_.topRightCorner(m, nf) = sf_.a_vec.leftCols(nf);
      kkt_.bottomLeftCorner(nf, m) = sf_.a_vec.leftCols(nf).transpose();
    }
    if (!kkt_.allFinite()) return false;
    lu_.compute(kkt_);
    return true;
  }

  /// Returns (Δx, Δy, Δs) for residuals (r_p, r_d) and scaled complementarity target r_c,
  /// with refinement on the full linearized system.
  bool solve(const RVec& rp, const ConeVec& rd, const ConeVec& rc, ConeVec& dx, RVec& dy, ConeVec& ds) const {
    const ConeVec rtil = lambda_div(sf_, sc_, rc);
    if (!solve_scaled(rp, rd, rtil, dx, dy, ds)) return false;
    for (int it = 0; it < 2; ++it) {
      const RVec ep = rp - apply_a(sf_, dx);
      ConeVec ed = rd - apply_at(sf_, dy);
      ed.axpy(-1.0, ds);
      ConeVec ec = rtil - scale_winvt(sf_, sc_, dx);
      ec.axpy(-1.0, scale_w(sf_, sc_, ds));
      ConeVec cx, cs;
      RVec cy;
      if (!solve_scaled(ep, ed, ec, cx, cy, cs)) return false;
      dx.axpy(1.0, cx);
      dy += cy;
      ds.axpy(1.0, cs);
    }
    return true;
  }

 private:
  // Solves A Δx = r_p, Aᵀ Δy + Δs = r_d, W^{-T} Δx + W Δs = r̃.
  bool solve_scaled(const RVec& rp, const ConeVec& rd, const ConeVec& rtil, ConeVec& dx, RVec& dy,
                    ConeVec& ds) const {
    const int m = sf_.m;
    const int nf = sf_.n_free;
    const ConeVec t1 = scale_wt(sf_, sc_, rtil);
    ConeVec rd_cone = rd;
    rd_cone.v.head(nf).setZero();
    const ConeVec t2 = apply_q(sf_, sc_, rd_cone);
    RVec rhs(m + nf);
    rhs.head(m) = rp - apply_a(sf_, t1 - t2);
    rhs.tail(nf) = rd.v.head(nf);
    RVec sol = lu_.solve(rhs);
    for (int it = 0; it < 2; ++it) sol += lu_.solve(rhs - kkt_ * sol);
    if (!sol.allFinite()) return false;
    dy = sol.head(m);
    ds = rd_cone;
    ds.axpy(-1.0, apply_at(sf_, dy));
    ds.v.head(nf).setZero();
    dx = t1 - apply_q(sf_, sc_, ds);
    dx.v.head(nf) = sol.tail(nf);
    return true;
  }

  const StandardForm& sf_;
  const Scaling& sc_;
  RMat kkt_;
  Eigen::PartialPivLU<RMat> lu_;
};

// ---------------------------------------------------------------------------

inline KernelPoint initial_point(const StandardForm& sf) {
  KernelPoint pt;
  pt.x = ConeVec::zeros(sf);
  pt.s = ConeVec::zeros(sf);
  pt.y = RVec::Zero(sf.m);
  auto block_init = [&](int n, const std::vector<double>& row_norms, const std::vector<int>& rows, double cnorm,
                        double& xi, double& eta) {
    const double sq = std::sqrt(static_cast<double>(n));
    xi = std::max(10.0, sq);
    eta = std::max(10.0, sq);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      xi = std::max(xi, n * (1.0 + std::abs(sf.b(rows[i]))) / (1.0 + row_norms[i]));
      eta = std::max(eta, row_norms[i]);
    }
    eta = std::max(eta, cnorm);
  };
  auto vec_block = [&](int begin, int len, double& xi, double& eta) {
    std::vector<double> norms;
    std::vector<int> rows;
    for (int i = 0; i < sf.m; ++i) {
      const double nr = sf.a_vec.row(i).segment(begin, len).norm();
      if (nr > 0.0) {
        norms.push_back(nr);
        rows.push_back(i);
      }
    }
    block_init(len, norms, rows, sf.c_vec.segment(begin, len).norm(), xi, eta);
  };
  double xi = 1.0, eta = 1.0;
  if (sf.n_lin > 0) {
    vec_block(sf.lin_begin(), sf.n_lin, xi, eta);
    pt.x.v.segment(sf.lin_begin(), sf.n_lin).setConstant(xi);
    pt.s.v.segment(sf.lin_begin(), sf.n_lin).setConstant(eta);
  }
  int off = sf.soc_begin();
  for (int dim : sf.soc_dims) {
    vec_block(off, dim, xi, eta);
    pt.x.v(off) = xi;
    pt.s.v(off) = eta;
    off += dim;
  }
  for (std::size_t blk = 0; blk < sf.psd_dims.size(); ++blk) {
    std::vector<double> norms;
    std::vector<int> rows;
    for (const auto& [row, mat] : sf.a_psd[blk]) {
      norms.push_back(mat.norm());
      rows.push_back(row);
    }
    block_init(sf.psd_dims[blk], norms, rows, sf.c_psd[blk].norm(), xi, eta);
    pt.x.mats[blk] = xi * RMat::Identity(sf.psd_dims[blk], sf.psd_dims[blk]);
    pt.s.mats[blk] = eta * RMat::Identity(sf.psd_dims[blk], sf.psd_dims[blk]);
  }
  return pt;
}

inline void symmetrize(ConeVec& c) {
  for (auto& m : c.mats) m = (0.5 * (m + m.transpose())).eval();
}

inline KernelResult solve_standard(const StandardForm& sf, const ToleranceSet& tol) {
  KernelResult res;
  KernelPoint pt = initial_point(sf);
  const double theta = std::max(1, sf.degree());
  const double nu_sum = sf.log_weight_sum();
  const ConeVec e = identity(sf);
  const ConeVec nu = log_target(sf);

  KernelPoint best = pt;
  double best_merit = std::numeric_limits<double>::infinity();
  double progress_merit = best_merit;  // merit must halve at least every kStallWindow iterations
  int progress_iter = 0;
  constexpr int kStallWindow = 25;
  int stalls = 0;

  for (int iter = 0; iter <= tol.max_iterations; ++iter) {
    res.iterations = iter;
    const KktResiduals kr = compute_residuals(sf, pt);
    if (tol.verbose)
      std::fprintf(stderr, "%3d pobj %+.10e dobj %+.10e pres %.2e dres %.2e gap %.2e\n", iter,
                   primal_objective(sf, pt.x), dual_objective(sf, pt.y, pt.s), kr.primal_rel, kr.dual_rel, kr.gap_rel);
    const double merit = std::max({kr.primal_rel / tol.primal, kr.dual_rel / tol.dual, kr.gap_rel / tol.gap});
    if (merit < best_merit) {
      best = pt;
      if (merit < 0.5 * progress_merit) {
        progress_merit = merit;
        progress_iter = iter;
      }
      best_merit = merit;
    }
    if (kr.primal_rel <= tol.primal && kr.dual_rel <= tol.dual && kr.gap_rel <= tol.gap) {
      res.status = SolveStatus::kOptimal;
      break;
    }

    // Farkas-type certificates.
    const double by = sf.b.dot(pt.y);
    if (by > 0.0) {
      ConeVec at = apply_at(sf, pt.y);
      at.axpy(1.0, pt.s);
      const double cert = full_norm(at) / by;
      const double margin = by / pt.y.norm();
      if (cert <= tol.infeasibility && margin > 10.0 * tol.primal) {
        res.status = SolveStatus::kPrimalInfeasible;
        res.certificate_residual = cert;
        res.infeasibility_margin = margin;
        res.certificate_y = pt.y / by;
        break;
      }
    }
    const double cx = objective_value(sf, pt.x);
    if (cx < 0.0 && nu_sum == 0.0) {
      const double cert = apply_a(sf, pt.x).norm() / (-cx);
      if (cert <= tol.infeasibility) {
        res.status = SolveStatus::kDualInfeasible;
        res.certificate_residual = cert;
        res.infeasibility_margin = -cx / full_norm(pt.x);
        break;
      }
    }
    if (iter == tol.max_iterations) {
      res.status = SolveStatus::kMaxIterations;
      break;
    }
    if (iter - progress_iter > kStallWindow) {
      if (tol.verbose) std::fprintf(stderr, "    no progress in %d iterations\n", kStallWindow);
      res.status = SolveStatus::kNumericalFailure;
      break;
    }

    Scaling sc;
    if (!compute_scaling(sf, pt.x, pt.s, sc)) {
      if (tol.verbose) std::fprintf(stderr, "    scaling failed\n");
      res.status = SolveStatus::kNumericalFailure;
      break;
    }
    NewtonSolver newton(sf, sc);
    if (!newton.factor()) {
      if (tol.verbose) std::fprintf(stderr, "    Schur factorization failed\n");
      res.status = SolveStatus::kNumericalFailure;
      break;
    }
    const RVec rp = sf.b - apply_a(sf, pt.x);
    ConeVec rd = apply_at(sf, pt.y);
    rd.axpy(1.0, pt.s);
    rd.v = sf.c_vec - rd.v;
    for (std::size_t i = 0; i < rd.mats.size(); ++i) rd.mats[i] = sf.c_psd[i] - rd.mats[i];

    const ConeVec lam = lambda_vec(sf, sc);
    const ConeVec lam2 = jordan_prod(sf, lam, lam);
    const double gap = complementarity(sf, pt.x, pt.s);
    const double mu = std::max(gap, 0.0) / theta;

    // Predictor.
    ConeVec rc = nu - lam2;
    ConeVec dxa, dsa;
    RVec dya;
    if (!newton.solve(rp, rd, rc, dxa, dya, dsa)) {
      res.status = SolveStatus::kNumericalFailure;
      break;
    }
    const double ap_aff = std::min(1.0, max_step(sf, pt.x, dxa));
    const double ad_aff = std::min(1.0, max_step(sf, pt.s, dsa));
    ConeVec xa = pt.x, sa = pt.s;
    xa.axpy(ap_aff, dxa);
    sa.axpy(ad_aff, dsa);
    const double gap_aff = complementarity(sf, xa, sa);
    double sigma = 0.0;
    if (gap > 0.0) sigma = std::pow(std::clamp(gap_aff / gap, 0.0, 1.0), 3.0);

    // Corrector.
    const ConeVec corr = jordan_prod(sf, scale_winvt(sf, sc, dxa), scale_w(sf, sc, dsa));
    rc = nu - lam2 - corr;
    rc.axpy(sigma * mu, e);
    ConeVec dx, ds;
    RVec dy;
    if (!newton.solve(rp, rd, rc, dx, dy, ds)) {
      res.status = SolveStatus::kNumericalFailure;
      break;
    }
    const double ap_max = max_step(sf, pt.x, dx);
    const double ad_max = max_step(sf, pt.s, ds);
    const double gamma = 0.9 + 0.09 * std::min({ap_max, ad_max, 1.0});
    const double ap = backtrack_to_interior(sf, pt.x, dx, std::min(1.0, gamma * ap_max));
    const double ad = backtrack_to_interior(sf, pt.s, ds, std::min(1.0, gamma * ad_max));
    if (!(ap > 0.0) || !(ad > 0.0) || !std::isfinite(ap) || !std::isfinite(ad)) {
      if (tol.verbose) std::fprintf(stderr, "    no admissible step (p %.3e, d %.3e)\n", ap, ad);
      res.status = SolveStatus::kNumericalFailure;
      break;
    }
    if (ap < 1e-10 && ad < 1e-10) {
      if (++stalls >= 3) {
        res.status = SolveStatus::kNumericalFailure;
        break;
      }
    } else {
      stalls = 0;
    }
    if (tol.verbose) std::fprintf(stderr, "    step p %.3e d %.3e sigma %.3e mu %.3e\n", ap, ad, sigma, mu);
    pt.x.axpy(ap, dx);
    pt.y += ad * dy;
    pt.s.axpy(ad, ds);
    symmetrize(pt.x);
    symmetrize(pt.s);
  }

  if (res.status == SolveStatus::kNumericalFailure || res.status == SolveStatus::kMaxIterations) pt = best;
  res.point = pt;
  res.residuals = compute_residuals(sf, pt);
  res.primal_objective = primal_objective(sf, pt.x);
  res.dual_objective = dual_objective(sf, pt.y, pt.s);
  return res;
}

}  // namespace detail
}  // namespace isacd2d::conic
