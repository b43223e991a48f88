#pragma once

// Mixed PSD / second-order / nonnegative cone programs over real variables.
//
//   minimize    <objective> − Σ_j ν_j ln(arg_j)
//   subject to  equalities e = 0, inequalities e ≥ 0,
//               second-order cones e_0 ≥ ‖(e_1, …, e_k)‖,
//               X_b ⪰ 0 for every PSD block, nonnegative scalars ≥ 0.
//
// Every e is an affine expression of the scalar variables and the blocks
// (a block enters through ⟨C, X_b⟩ with C symmetric).

#include <string>
#include <utility>
#include <vector>

#include "isacd2d/errors.hpp"
#include "isacd2d/linalg.hpp"

namespace isacd2d::conic {

enum class ScalarKind { kNonneg, kFree };

struct LinearExpr {
  std::vector<std::pair<int, double>> scalars;
  std::vector<std::pair<int, RMat>> blocks;
  double constant = 0.0;

  LinearExpr() = default;
  explicit LinearExpr(double c) : constant(c) {}

  LinearExpr& add(int scalar, double coeff) {
    scalars.emplace_back(scalar, coeff);
    return *this;
  }
  LinearExpr& add_block(int block, const RMat& coeff) {
    blocks.emplace_back(block, 0.5 * (coeff + coeff.transpose()));
    return *this;
  }
  LinearExpr& add_constant(double c) {
    constant += c;
    return *this;
  }
};

struct SocConstraint {
  std::vector<LinearExpr> components;  // components[0] is the cone "height"
};

struct LogTerm {
  double weight = 1.0;
  LinearExpr argument;
};

class ConicProgram {
 public:
  int add_psd_block(int dim) {
    if (dim < 1) throw ConstructionError("PSD block dimension must be >= 1");
    psd_dims_.push_back(dim);
    return static_cast<int>(psd_dims_.size()) - 1;
  }
  int add_scalar(ScalarKind kind) {
    scalar_kinds_.push_back(kind);
    return static_cast<int>(scalar_kinds_.size()) - 1;
  }
  void add_equality(LinearExpr e) { equalities_.push_back(std::move(e)); }
  void add_inequality(LinearExpr e) { inequalities_.push_back(std::move(e)); }
  void add_soc(std::vector<LinearExpr> components) {
    if (components.size() < 2) throw ConstructionError("second-order cone needs at least 2 components");
    socs_.push_back({std::move(components)});
  }
  /// Adds −weight·ln(argument) to the objective; weight > 0.
  void add_log_term(double weight, LinearExpr argument) {
    if (!(weight > 0.0)) throw ConstructionError("log term weight must be positive");
    logs_.push_back({weight, std::move(argument)});
  }
  void set_objective(LinearExpr e) { objective_ = std::move(e); }

  const std::vector<int>& psd_dims() const { return psd_dims_; }
  const std::vector<ScalarKind>& scalar_kinds() const { return scalar_kinds_; }
  const std::vector<LinearExpr>& equalities() const { return equalities_; }
  const std::vector<LinearExpr>& inequalities() const { return inequalities_; }
  const std::vector<SocConstraint>& socs() const { return socs_; }
  const std::vector<LogTerm>& log_terms() const { return logs_; }
  const LinearExpr& objective() const { return objective_; }
  int num_scalars() const { return static_cast<int>(scalar_kinds_.size()); }
  int num_blocks() const { return static_cast<int>(psd_dims_.size()); }

  void validate() const {
    auto check = [&](const LinearExpr& e, const char* where) {
      for (const auto& [idx, c] : e.scalars) {
        if (idx < 0 || idx >= num_scalars())
          throw ConstructionError(std::string(where) + ": unknown scalar variable");
        if (!std::isfinite(c)) throw ConstructionError(std::string(where) + ": non-finite coefficient");
      }
      for (const auto& [blk, m] : e.blocks) {
        if (blk < 0 || blk >= num_blocks())
          throw ConstructionError(std::string(where) + ": unknown PSD block");
        if (m.rows() != psd_dims_[blk] || m.cols() != psd_dims_[blk])
          throw ConstructionError(std::string(where) + ": block coefficient has wrong dimension");
        if (!m.allFinite()) throw ConstructionError(std::string(where) + ": non-finite coefficient");
      }
      if (!std::isfinite(e.constant)) throw ConstructionError(std::string(where) + ": non-finite constant");
    };
    check(objective_, "objective");
    for (const auto& e : equalities_) check(e, "equality");
    for (const auto& e : inequalities_) check(e, "inequality");
    for (const auto& s : socs_)
      for (const auto& e : s.components) check(e, "soc");
    for (const auto& l : logs_) check(l.argument, "log term");
  }

 private:
  std::vector<int> psd_dims_;
  std::vector<ScalarKind> scalar_kinds_;
  std::vector<LinearExpr> equalities_;
  std::vector<LinearExpr> inequalities_;
  std::vector<SocConstraint> socs_;
  std::vector<LogTerm> logs_;
  LinearExpr objective_;
};

/// Evaluates an affine expression at given scalar values and blocks.
inline double evaluate(const LinearExpr& e, const RVec& scalars, const std::vector<RMat>& blocks) {
  double v = e.constant;
  for (const auto& [idx, c] : e.scalars) v += c * scalars(idx);
  for (const auto& [blk, m] : e.blocks) v += (m.array() * blocks[blk].array()).sum();
  return v;
}

}  // namespace isacd2d::conic
