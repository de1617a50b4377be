#include <algorithm>
#include <stdexcept>

#include "fdplab/moments.hpp"

namespace fdplab {

ReplicateEvaluator::ReplicateEvaluator(ProcedureSpec spec, std::size_t leave_depth)
    : spec_(std::move(spec)), depth_(leave_depth) {
  if (depth_ > kMaxLeaveDepth) {
    throw std::invalid_argument("ReplicateEvaluator: leave depth exceeds the supported maximum");
  }
  zero_set_.reserve(kMaxLeaveDepth);
}

double ReplicateEvaluator::critical(std::size_t count) const noexcept {
  const auto& family = spec_.family();
  if (const auto* f = std::get_if<AdaptiveCappedFamily>(&family)) {
    return adaptive_value(count, f->alpha, f->lambda, m0_hat_);
  }
  if (const auto* f = std::get_if<QuotientFamily>(&family)) {
    return quotient_value(count, m_, f->alpha, f->a, f->b);
  }
  return static_cast<double>(count) * std::get<BhFamily>(family).alpha / static_cast<double>(m_);
}

ReplicateRecord ReplicateEvaluator::evaluate(const PValueSample& sample) {
  const auto& labels = sample.is_null();
  return run(sample.values(), sample.m0(), [&labels](std::size_t i) { return static_cast<bool>(labels[i]); });
}

ReplicateRecord ReplicateEvaluator::evaluate_nulls_first(std::span<const double> values, std::size_t m0) {
  if (m0 == 0 || m0 > values.size()) {
    throw std::invalid_argument("ReplicateEvaluator: need 1 <= m0 <= m");
  }
  return run(values, m0, [m0](std::size_t i) { return i < m0; });
}

template <class IsNull>
ReplicateRecord ReplicateEvaluator::run(std::span<const double> values, std::size_t m0, IsNull is_null) {
  m_ = values.size();
  const double lambda = spec_.split_point();
  ReplicateRecord rec;
  rec.m = m_;
  rec.m0 = m0;
  rec.leave_depth = depth_;

  tail_.clear();
  zero_set_.clear();
  for (std::size_t i = 0; i < m_; ++i) {
    const double p = values[i];
    if (p <= lambda) {
      ++rec.r_lambda;
      if (is_null(i)) {
        ++rec.v_lambda;
        if (zero_set_.size() < depth_) {
          zero_set_.push_back(i);
        }
      }
    } else {
      tail_.push_back(p);
    }
  }

  if (spec_.is_adaptive()) {
    const auto& fam = spec_.adaptive_family();
    const TailView view(m_, fam.lambda, rec.r_lambda, std::move(tail_));
    m0_hat_ = apply_floor(raw_estimate(fam.estimator, view), view, fam.alpha).floored;
    // take the buffer back for the next replicate
    tail_.assign(view.tail_values().begin(), view.tail_values().end());
  } else {
    m0_hat_ = static_cast<double>(m_);
  }
  rec.m0_hat = m0_hat_;

  const double cutoff = critical(m_);
  candidates_.clear();
  for (std::size_t i = 0; i < m_; ++i) {
    if (values[i] <= cutoff) {
      candidates_.push_back({values[i], i, is_null(i)});
    }
  }
  std::sort(candidates_.begin(), candidates_.end(), [](const Candidate& x, const Candidate& y) {
    return x.p < y.p || (x.p == y.p && x.index < y.index);
  });

  // every position beyond the candidates has p > cutoff >= its critical value
  std::size_t r = 0;
  for (std::size_t i = candidates_.size(); i > 0; --i) {
    if (candidates_[i - 1].p <= critical(i)) {
      r = i;
      break;
    }
  }
  rec.r = r;
  for (std::size_t i = 0; i < r; ++i) {
    rec.v += candidates_[i].null ? 1 : 0;
  }
  rec.threshold = r > 0 ? critical(r) : 0.0;
  rec.r_leave[0] = r;
  rec.crit_at[0] = rec.threshold;

  // Leave-j-out: z zeros sit in front; the remaining candidates keep their
  // order. Zeroed entries above the cutoff are not candidates, so they only
  // shift positions.
  for (std::size_t j = 1; j <= depth_; ++j) {
    const std::size_t z = std::min(j, zero_set_.size());
    const auto zeroed = std::span<const std::size_t>(zero_set_).first(z);
    std::size_t zeroed_candidates = 0;
    for (std::size_t idx : zeroed) {
      zeroed_candidates += values[idx] <= cutoff ? 1 : 0;
    }
    std::size_t pos = z + candidates_.size() - zeroed_candidates;
    std::size_t rj = z;
    for (std::size_t c = candidates_.size(); c > 0 && pos > z; --c) {
      const Candidate& cand = candidates_[c - 1];
      if (cand.null && std::find(zeroed.begin(), zeroed.end(), cand.index) != zeroed.end()) {
        continue;
      }
      if (cand.p <= critical(pos)) {
        rj = pos;
        break;
      }
      --pos;
    }
    rec.r_leave[j] = rj;
    rec.crit_at[j] = rj > 0 ? critical(rj) : 0.0;
  }
  return rec;
}

}  // namespace fdplab
