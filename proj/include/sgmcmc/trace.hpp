#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sgmcmc/types.hpp"

namespace sgmcmc {

//! Retained post-burn-in samples of one chain.  Rows of `samples` are
//! parameter vectors in recording order; `iterations` holds the chain
//! iteration each row was taken at; `seconds` is cumulative post-burn-in
//! compute time (trace I/O excluded) when the row was recorded.
template <typename S>
struct Trace {
  MatrixX<S> samples;
  std::vector<std::int64_t> iterations;
  std::vector<double> seconds;
  std::string sampler;      // kind label, e.g. "sgfs-f"
  std::string config_json;  // snapshot sufficient to reproduce the run

  Index size() const { return samples.rows(); }
  Index dim() const { return samples.cols(); }

  //! Average compute seconds per retained sample.
  double time_per_sample() const {
    if (size() == 0 || seconds.empty()) return 0.0;
    return seconds.back() / static_cast<double>(size());
  }
};

}  // namespace sgmcmc
