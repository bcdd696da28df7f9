#pragma once

#include <algorithm>
#include <limits>

#include "lbtopo/forward.hpp"

namespace lbtopo::detail {

/// Steps in windows; after each window checks divergence, then the relative
/// change of observe() against the previous window. With pair_average each
/// window after the first opens with one step whose result is averaged with
/// the state before it.
template <class Solver, class Observable>
inline RunResult run_loop(Solver& solver, const RunOptions& opt, Observable observe, PopulationField& pop) {
  RunResult result;
  Eigen::MatrixXd previous = observe();
  long step = 0;
  while (step < opt.max_steps) {
    if (opt.pair_average && step > 0 && step + opt.window < opt.max_steps) {
      const PopulationField keep = pop;
      solver.step();
      ++step;
      pop = 0.5 * (keep + pop);
    }
    const long chunk = std::min<long>(opt.window, opt.max_steps - step);
    for (long k = 0; k < chunk; ++k) solver.step();
    step += chunk;
    HistoryRow row;
    row.step = step;
    if (solver.diverged()) {
      row.residual = std::numeric_limits<double>::infinity();
      row.mass = pop.sum();
      result.history.push_back(row);
      result.status = RunStatus::Diverged;
      result.divergence_step = step;
      result.steps = step;
      return result;
    }
    Eigen::MatrixXd current = observe();
    row.residual = relative_change(current, previous);
    row.mass = pop.sum();
    row.objective = opt.objective ? opt.objective() : std::numeric_limits<double>::quiet_NaN();
    result.history.push_back(row);
    previous = std::move(current);
    if (chunk == opt.window && row.residual < opt.tol && step >= opt.min_steps) {
      result.status = RunStatus::Converged;
      result.steps = step;
      return result;
    }
  }
  result.status = RunStatus::MaxSteps;
  result.steps = step;
  return result;
}


}  // namespace lbtopo::detail
