#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "prophecy/staging/context.hpp"
#include "prophecy/staging/interpret.hpp"

namespace prophecy::nn {

using staging::Dyn;
using staging::FalseTop;
using staging::StageContext;

// Copyable on purpose: a branch arm works on its own copy, so the history
// flag cleared in one arm is still set in the other.
struct MLTensor {
  int size = 0;
  Dyn buffer = Dyn(0);
  staging::HistoryVar<bool> is_last_convolution{false};
  std::optional<staging::Prophecy<FalseTop>> is_next_relu;
};

class Session {
 public:
  explicit Session(StageContext& ctx, bool force_unfused = false) : ctx_(ctx), force_unfused_(force_unfused) {}

  MLTensor wrap(const Dyn& buffer, int size);
  MLTensor convolve(const MLTensor& input, const MLTensor& filter);
  // Clears the input's convolution flag, as the op that follows it.
  MLTensor relu(MLTensor& input, float threshold);

  const std::map<std::size_t, std::string>& cell_labels() const { return labels_; }

 private:
  StageContext& ctx_;
  bool force_unfused_;
  std::map<std::size_t, std::string> labels_;
};

struct ConvReluOptions {
  int iterations = 10;
  bool force_unfused = false;
  std::size_t max_runs = 1000;
};

struct ConvReluResult {
  staging::StageResult staged;
  int size = 0;
  int filter_size = 0;
  std::map<std::size_t, std::string> cell_labels;
  // Maximal loop nests inside each top-level loop: {divergent part, uniform part}.
  std::vector<int> loop_nests;
};

// Part 1: convolution, then relu(2.0) or relu(4.0) depending on a staged
// flag. Part 2: convolution, then relu(1.56).
ConvReluResult build_conv_relu_benchmark(int size, int filter_size, const ConvReluOptions& opts = {});

// Number of maximal For nests directly inside each top-level For, looking
// through if statements.
std::vector<int> loop_nests_per_top_loop(const staging::SecondStageProgram& prog);

// Random input and filter in [-1, 1] plus the branch flag.
staging::InterpInputs random_inputs(const ConvReluResult& r, std::uint64_t seed, bool small_t);

std::vector<std::string> derivation(const ConvReluResult& r);

}  // namespace prophecy::nn
