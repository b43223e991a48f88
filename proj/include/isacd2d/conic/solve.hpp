#pragma once

// Front end of the cone solver: lowers a ConicProgram to standard form,
// runs the interior-point kernel and maps the answer back.
//
// Standard-form layout
//   columns: [free scalars | nonneg scalars, inequality slacks, log variables | SOC blocks | PSD blocks]
//   rows:    equalities, inequalities (e − t = 0), SOC components (u_i − e_i = 0),
//            log arguments (κ z − e = 0, so z = e/κ ~ 1)
// Every row is divided by its largest coefficient. Residuals and row duals
// are reported for this equilibrated system.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "isacd2d/conic/kernel.hpp"
#include "isacd2d/conic/program.hpp"
#include "isacd2d/errors.hpp"

namespace isacd2d::conic {

struct ConicSolution {
  SolveStatus status = SolveStatus::kNumericalFailure;

  // Primal values.
  RVec scalars;
  std::vector<RMat> blocks;
  RVec inequality_slacks;
  std::vector<RVec> soc_values;
  RVec log_arguments;

  // Dual values: row multipliers of the equilibrated system, then the cone duals.
  RVec row_duals;
  RVec scalar_duals;
  RVec slack_duals;
  std::vector<RVec> soc_duals;
  RVec log_duals;
  std::vector<RMat> block_duals;

  double primal_objective = std::numeric_limits<double>::quiet_NaN();
  double dual_objective = std::numeric_limits<double>::quiet_NaN();
  KktResiduals residuals;
  int iterations = 0;
  double certificate_residual = std::numeric_limits<double>::quiet_NaN();
  double infeasibility_margin = std::numeric_limits<double>::quiet_NaN();
  std::string log_handling = "native";
  int cuts = 0;

  bool optimal() const { return status == SolveStatus::kOptimal; }
};

namespace detail {

struct Compiled {
  StandardForm sf;
  RVec row_scale;
  std::vector<int> scalar_col;
  int slack_begin = 0;  // kernel column of the first inequality slack
  int log_begin = 0;    // kernel column of the first log variable
  std::vector<int> soc_offset;
  std::vector<double> log_kappa;
  double objective_constant = 0.0;
  int n_eq = 0, n_ineq = 0, n_soc_rows = 0, n_log = 0;
};

inline Compiled compile(const ConicProgram& p) {
  p.validate();
  Compiled cp;
  StandardForm& sf = cp.sf;

  const int ns = p.num_scalars();
  cp.scalar_col.assign(ns, -1);
  int n_free = 0, n_nonneg = 0;
  for (int i = 0; i < ns; ++i) (p.scalar_kinds()[i] == ScalarKind::kFree ? n_free : n_nonneg)++;
  {
    int fc = 0, lc = n_free;
    for (int i = 0; i < ns; ++i) cp.scalar_col[i] = p.scalar_kinds()[i] == ScalarKind::kFree ? fc++ : lc++;
  }
  cp.n_eq = static_cast<int>(p.equalities().size());
  cp.n_ineq = static_cast<int>(p.inequalities().size());
  cp.n_log = static_cast<int>(p.log_terms().size());
  for (const auto& s : p.socs()) {
    sf.soc_dims.push_back(static_cast<int>(s.components.size()));
    cp.n_soc_rows += static_cast<int>(s.components.size());
  }
  sf.n_free = n_free;
  sf.n_lin = n_nonneg + cp.n_ineq + cp.n_log;
  sf.psd_dims = p.psd_dims();
  cp.slack_begin = n_free + n_nonneg;
  cp.log_begin = cp.slack_begin + cp.n_ineq;
  {
    int off = sf.soc_begin();
    for (int d : sf.soc_dims) {
      cp.soc_offset.push_back(off);
      off += d;
    }
  }

  sf.m = cp.n_eq + cp.n_ineq + cp.n_soc_rows + cp.n_log;
  const int nv = sf.n_vec();
  sf.a_vec = RMat::Zero(sf.m, nv);
  sf.b = RVec::Zero(sf.m);
  sf.a_psd.assign(sf.psd_dims.size(), {});

  auto put_expr = [&](int row, const LinearExpr& e, double sign) {
    for (const auto& [idx, c] : e.scalars) sf.a_vec(row, cp.scalar_col[idx]) += sign * c;
    for (const auto& [blk, m] : e.blocks) {
      auto& list = sf.a_psd[blk];
      if (!list.empty() && list.back().first == row)
        list.back().second += sign * m;
      else
        list.emplace_back(row, sign * m);
    }
  };

  int row = 0;
  for (const auto& e : p.equalities()) {
    put_expr(row, e, 1.0);
    sf.b(row) = -e.constant;
    ++row;
  }
  for (int i = 0; i < cp.n_ineq; ++i) {
    const auto& e = p.inequalities()[i];
    put_expr(row, e, 1.0);
    sf.a_vec(row, cp.slack_begin + i) = -1.0;
    sf.b(row) = -e.constant;
    ++row;
  }
  for (std::size_t q = 0; q < p.socs().size(); ++q) {
    const auto& comps = p.socs()[q].components;
    for (std::size_t k = 0; k < comps.size(); ++k) {
      sf.a_vec(row, cp.soc_offset[q] + static_cast<int>(k)) = 1.0;
      put_expr(row, comps[k], -1.0);
      sf.b(row) = comps[k].constant;
      ++row;
    }
  }
  sf.log_weight = RVec::Zero(sf.n_lin);
  for (int j = 0; j < cp.n_log; ++j) {
    const auto& lt = p.log_terms()[j];
    double kappa = std::abs(lt.argument.constant);
    for (const auto& [idx, c] : lt.argument.scalars) kappa = std::max(kappa, std::abs(c));
    for (const auto& [blk, m] : lt.argument.blocks) kappa = std::max(kappa, m.cwiseAbs().maxCoeff());
    if (!(kappa > 0.0)) throw ConstructionError("log term argument is identically zero");
    cp.log_kappa.push_back(kappa);
    sf.a_vec(row, cp.log_begin + j) = kappa;
    put_expr(row, lt.argument, -1.0);
    sf.b(row) = lt.argument.constant;
    sf.log_weight(cp.log_begin + j - sf.lin_begin()) = lt.weight;
    cp.objective_constant -= lt.weight * std::log(kappa);
    ++row;
  }

  // Equilibrate.
  cp.row_scale = RVec::Ones(sf.m);
  for (int r = 0; r < sf.m; ++r) {
    double mx = nv > 0 ? sf.a_vec.row(r).cwiseAbs().maxCoeff() : 0.0;
    for (const auto& list : sf.a_psd)
      for (const auto& [rr, m] : list)
        if (rr == r) mx = std::max(mx, m.cwiseAbs().maxCoeff());
    if (!(mx > 0.0)) throw ConstructionError("constraint row references no variable");
    cp.row_scale(r) = mx;
  }
  for (int r = 0; r < sf.m; ++r) {
    sf.a_vec.row(r) /= cp.row_scale(r);
    sf.b(r) /= cp.row_scale(r);
  }
  for (auto& list : sf.a_psd)
    for (auto& [r, m] : list) m /= cp.row_scale(r);

  sf.c_vec = RVec::Zero(nv);
  for (int d : sf.psd_dims) sf.c_psd.push_back(RMat::Zero(d, d));
  for (const auto& [idx, c] : p.objective().scalars) sf.c_vec(cp.scalar_col[idx]) += c;
  for (const auto& [blk, m] : p.objective().blocks) sf.c_psd[blk] += m;
  cp.objective_constant += p.objective().constant;
  return cp;
}

inline ConicSolution unpack(const Compiled& cp, const KernelPoint& pt) {
  const StandardForm& sf = cp.sf;
  ConicSolution sol;
  const int ns = static_cast<int>(cp.scalar_col.size());
  sol.scalars.resize(ns);
  sol.scalar_duals.resize(ns);
  for (int i = 0; i < ns; ++i) {
    sol.scalars(i) = pt.x.v(cp.scalar_col[i]);
    sol.scalar_duals(i) = pt.s.v(cp.scalar_col[i]);
  }
  sol.inequality_slacks = pt.x.v.segment(cp.slack_begin, cp.n_ineq);
  sol.slack_duals = pt.s.v.segment(cp.slack_begin, cp.n_ineq);
  sol.log_arguments.resize(cp.n_log);
  sol.log_duals = pt.s.v.segment(cp.log_begin, cp.n_log);
  for (int j = 0; j < cp.n_log; ++j) sol.log_arguments(j) = cp.log_kappa[j] * pt.x.v(cp.log_begin + j);
  for (std::size_t q = 0; q < sf.soc_dims.size(); ++q) {
    sol.soc_values.push_back(pt.x.v.segment(cp.soc_offset[q], sf.soc_dims[q]));
    sol.soc_duals.push_back(pt.s.v.segment(cp.soc_offset[q], sf.soc_dims[q]));
  }
  sol.blocks = pt.x.mats;
  sol.block_duals = pt.s.mats;
  sol.row_duals = pt.y;
  return sol;
}

/// Rebuilds the kernel point from the user-facing fields of a solution.
inline KernelPoint repack(const Compiled& cp, const ConicSolution& sol) {
  const StandardForm& sf = cp.sf;
  KernelPoint pt;
  pt.x = ConeVec::zeros(sf);
  pt.s = ConeVec::zeros(sf);
  pt.y = RVec::Zero(sf.m);
  auto need = [](bool ok) {
    if (!ok) throw ConstructionError("solution does not match the program layout");
  };
  const int ns = static_cast<int>(cp.scalar_col.size());
  need(sol.scalars.size() == ns && static_cast<int>(sol.blocks.size()) == static_cast<int>(sf.psd_dims.size()));
  for (int i = 0; i < ns; ++i) {
    pt.x.v(cp.scalar_col[i]) = sol.scalars(i);
    if (sol.scalar_duals.size() == ns) pt.s.v(cp.scalar_col[i]) = sol.scalar_duals(i);
  }
  need(sol.inequality_slacks.size() == cp.n_ineq && sol.log_arguments.size() == cp.n_log);
  pt.x.v.segment(cp.slack_begin, cp.n_ineq) = sol.inequality_slacks;
  if (sol.slack_duals.size() == cp.n_ineq) pt.s.v.segment(cp.slack_begin, cp.n_ineq) = sol.slack_duals;
  for (int j = 0; j < cp.n_log; ++j) pt.x.v(cp.log_begin + j) = sol.log_arguments(j) / cp.log_kappa[j];
  if (sol.log_duals.size() == cp.n_log) pt.s.v.segment(cp.log_begin, cp.n_log) = sol.log_duals;
  need(sol.soc_values.size() == sf.soc_dims.size());
  for (std::size_t q = 0; q < sf.soc_dims.size(); ++q) {
    pt.x.v.segment(cp.soc_offset[q], sf.soc_dims[q]) = sol.soc_values[q];
    if (sol.soc_duals.size() == sf.soc_dims.size()) pt.s.v.segment(cp.soc_offset[q], sf.soc_dims[q]) = sol.soc_duals[q];
  }
  pt.x.mats = sol.blocks;
  if (sol.block_duals.size() == sf.psd_dims.size()) pt.s.mats = sol.block_duals;
  if (sol.row_duals.size() == sf.m) pt.y = sol.row_duals;
  return pt;
}

}  // namespace detail

/// Primal, dual and gap residuals of the equilibrated standard form (absolute and relative).
inline KktResiduals kkt_residuals(const ConicProgram& p, const ConicSolution& sol) {
  const detail::Compiled cp = detail::compile(p);
  return detail::compute_residuals(cp.sf, detail::repack(cp, sol));
}

inline ConicSolution solve(const ConicProgram& p, const ToleranceSet& tol = {}) {
  const detail::Compiled cp = detail::compile(p);
  const detail::KernelResult kr = detail::solve_standard(cp.sf, tol);
  ConicSolution sol = detail::unpack(cp, kr.point);
  sol.status = kr.status;
  sol.iterations = kr.iterations;
  sol.residuals = kr.residuals;
  sol.primal_objective = kr.primal_objective + cp.objective_constant;
  sol.dual_objective = kr.dual_objective + cp.objective_constant;
  sol.certificate_residual = kr.certificate_residual;
  sol.infeasibility_margin = kr.infeasibility_margin;
  return sol;
}

/// Solves p with every −ν·ln(arg) term replaced by ν·τ and supporting cuts
/// τ ≥ −ln z0 − (arg − z0)/z0, adding one cut per term per round until the
/// epigraph gap is below cut_tol. The returned point is expressed in p's layout;
/// cone duals are not available on this route.
inline ConicSolution solve_with_cuts(const ConicProgram& p, const ToleranceSet& tol = {}, double cut_tol = 1e-8,
                                     int max_rounds = 300) {
  if (p.log_terms().empty()) return solve(p, tol);
  const auto& logs = p.log_terms();
  const int nl = static_cast<int>(logs.size());
  ConicProgram base;
  // Rebuild without log terms.
  for (int d : p.psd_dims()) base.add_psd_block(d);
  for (auto k : p.scalar_kinds()) base.add_scalar(k);
  for (const auto& e : p.equalities()) base.add_equality(e);
  for (const auto& e : p.inequalities()) base.add_inequality(e);
  for (const auto& s : p.socs()) base.add_soc(s.components);
  LinearExpr obj = p.objective();
  std::vector<int> tau(nl);
  for (int j = 0; j < nl; ++j) {
    tau[j] = base.add_scalar(ScalarKind::kFree);
    obj.add(tau[j], logs[j].weight);
    base.add_inequality(logs[j].argument);
  }
  base.set_objective(obj);
  auto add_cut = [&](int j, double z0) {
    LinearExpr cut = logs[j].argument;
    for (auto& [idx, c] : cut.scalars) c /= z0;
    for (auto& [blk, m] : cut.blocks) m /= z0;
    cut.constant = cut.constant / z0 + std::log(z0) - 1.0;
    cut.add(tau[j], 1.0);
    base.add_inequality(std::move(cut));
  };
  for (int j = 0; j < nl; ++j) add_cut(j, 1.0);

  ConicSolution inner;
  int rounds = 0;
  int cuts = nl;
  for (; rounds < max_rounds; ++rounds) {
    inner = solve(base, tol);
    if (!inner.optimal()) break;
    bool done = true;
    for (int j = 0; j < nl; ++j) {
      const double z = evaluate(logs[j].argument, inner.scalars, inner.blocks);
      const double zc = std::max(z, 1e-12);
      const double gap = -std::log(zc) - inner.scalars(tau[j]);
      if (gap > cut_tol * (1.0 + std::abs(std::log(zc)))) {
        add_cut(j, zc);
        ++cuts;
        done = false;
      }
    }
    if (done) break;
  }

  ConicSolution sol;
  sol.status = inner.status;
  if (inner.status == SolveStatus::kOptimal && rounds == max_rounds) sol.status = SolveStatus::kMaxIterations;
  sol.iterations = inner.iterations;
  sol.residuals = inner.residuals;
  sol.certificate_residual = inner.certificate_residual;
  sol.infeasibility_margin = inner.infeasibility_margin;
  sol.scalars = inner.scalars.head(p.num_scalars());
  sol.blocks = inner.blocks;
  sol.inequality_slacks = RVec(p.inequalities().size());
  for (std::size_t i = 0; i < p.inequalities().size(); ++i)
    sol.inequality_slacks(i) = evaluate(p.inequalities()[i], sol.scalars, sol.blocks);
  for (const auto& s : p.socs()) {
    RVec v(s.components.size());
    for (std::size_t k = 0; k < s.components.size(); ++k) v(k) = evaluate(s.components[k], sol.scalars, sol.blocks);
    sol.soc_values.push_back(v);
  }
  sol.log_arguments = RVec(nl);
  double pobj = evaluate(p.objective(), sol.scalars, sol.blocks);
  for (int j = 0; j < nl; ++j) {
    sol.log_arguments(j) = evaluate(logs[j].argument, sol.scalars, sol.blocks);
    pobj -= logs[j].weight * std::log(std::max(sol.log_arguments(j), 1e-300));
  }
  sol.primal_objective = pobj;
  // The cut model's optimum is a valid lower bound on the log-program optimum.
  sol.dual_objective = inner.dual_objective;
  sol.log_handling = "cutting-plane";
  sol.cuts = cuts;
  return sol;
}

}  // namespace isacd2d::conic
