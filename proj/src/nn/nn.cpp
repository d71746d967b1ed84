#include "prophecy/nn/nn.hpp"

#include <functional>
#include <random>

namespace prophecy::nn {

using staging::StagingError;
using staging::Type;

MLTensor Session::wrap(const Dyn& buffer, int size) {
  if (size <= 0) throw StagingError("tensor size must be positive");
  if (buffer.type() != Type::float_ptr) throw StagingError("tensor buffer must be a float pointer");
  MLTensor t;
  t.size = size;
  t.buffer = buffer;
  return t;
}

MLTensor Session::convolve(const MLTensor& input, const MLTensor& filter) {
  if (filter.size > input.size) throw StagingError("filter is larger than the input");
  MLTensor output;
  output.size = input.size;
  output.buffer = ctx_.declare(Type::float_ptr, ctx_.call_value("runtime::malloc", {input.size * 4}));
  if (!force_unfused_) {
    output.is_last_convolution = true;
    output.is_next_relu = ctx_.prophecy<FalseTop>(FalseTop::unspecified());
    labels_[output.is_next_relu->id()] = "conv#" + std::to_string(labels_.size()) + ".is_next_relu";
  }

  // simple convolution that follows wrap around behavior
  ctx_.for_loop(0, input.size, 1, [&](const Dyn& i) {
    Dyn sum = ctx_.declare(Type::float_, 0.0f);
    ctx_.for_loop(0, filter.size, 1, [&](const Dyn& j) {
      ctx_.assign(sum, sum + input.buffer[(i + j) % input.size] * filter.buffer[j]);
    });
    if (output.is_next_relu) {
      const auto v = output.is_next_relu->get();
      if (v.level == FalseTop::Level::T) ctx_.if_else(sum < v.threshold, [&] { ctx_.assign(sum, 0.0f); });
    }
    ctx_.assign(output.buffer[i], sum);
  });
  return output;
}

MLTensor Session::relu(MLTensor& input, float threshold) {
  if (input.is_last_convolution) {
    input.is_last_convolution = false;
    input.is_next_relu->require(FalseTop::t(threshold));
    if (input.is_next_relu->get().level == FalseTop::Level::T) return input;
  }
  MLTensor out = input;
  ctx_.for_loop(0, out.size, 1, [&](const Dyn& i) {
    ctx_.if_else(out.buffer[i] < threshold, [&] { ctx_.assign(out.buffer[i], 0.0f); });
  });
  return out;
}

ConvReluResult build_conv_relu_benchmark(int size, int filter_size, const ConvReluOptions& opts) {
  if (size <= 0 || filter_size <= 0) throw StagingError("sizes must be positive");
  if (opts.iterations <= 0) throw StagingError("iterations must be positive");
  ConvReluResult out;
  out.size = size;
  out.filter_size = filter_size;

  auto gen = [&](StageContext& ctx) {
    Session s(ctx, opts.force_unfused);
    Dyn in_buf = ctx.param(Type::float_ptr);
    Dyn w_buf = ctx.param(Type::float_ptr);
    Dyn small_t = ctx.param(Type::bool_);
    MLTensor input = s.wrap(in_buf, size);
    MLTensor weight = s.wrap(w_buf, filter_size);

    ctx.for_loop(0, opts.iterations, 1, [&](const Dyn&) {
      ctx.call("runtime::start_time", {});
      MLTensor conv = s.convolve(input, weight);
      ctx.if_else(
          small_t,
          [&s, &ctx, conv]() mutable {
            MLTensor output = s.relu(conv, 2.0f);
            ctx.call("runtime::end_time", {});
            ctx.call("runtime::consume_tensor", {output.buffer});
          },
          [&s, &ctx, conv]() mutable {
            // Different threshold on a different branch
            MLTensor output = s.relu(conv, 4.0f);
            ctx.call("runtime::end_time", {});
            ctx.call("runtime::consume_tensor", {output.buffer});
          });
    });

    ctx.for_loop(0, opts.iterations, 1, [&](const Dyn&) {
      ctx.call("runtime::start_time", {});
      MLTensor conv = s.convolve(input, weight);
      MLTensor output = s.relu(conv, 1.56f);
      ctx.call("runtime::end_time", {});
      ctx.call("runtime::consume_tensor", {output.buffer});
    });
    out.cell_labels = s.cell_labels();
  };

  staging::StageOptions so;
  so.max_runs = opts.max_runs;
  so.runtime_header = "ml_runtime.h";
  so.function_name = opts.force_unfused ? "benchmark_unfused" : "benchmark";
  out.staged = staging::run_staged(gen, so);
  out.loop_nests = loop_nests_per_top_loop(out.staged.program);
  return out;
}

std::vector<int> loop_nests_per_top_loop(const staging::SecondStageProgram& prog) {
  std::function<int(const staging::Block&)> count = [&](const staging::Block& b) {
    int n = 0;
    for (const auto& s : b) {
      if (std::holds_alternative<staging::For>(s.node)) {
        ++n;
      } else if (const auto* i = std::get_if<staging::If>(&s.node)) {
        n += count(i->then_body) + count(i->else_body);
      }
    }
    return n;
  };
  std::vector<int> out;
  for (const auto& s : prog.body)
    if (const auto* f = std::get_if<staging::For>(&s.node)) out.push_back(count(f->body));
  return out;
}

staging::InterpInputs random_inputs(const ConvReluResult& r, std::uint64_t seed, bool small_t) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-1.0f, 1.0f);
  staging::InterpInputs in;
  auto fill = [&](const std::string& name, int n) {
    auto& v = in.buffers[name];
    v.resize(static_cast<std::size_t>(n));
    for (auto& e : v) e = dist(rng);
  };
  fill("arg0", r.size);
  fill("arg1", r.filter_size);
  in.scalars["arg2"] = small_t ? 1.0 : 0.0;
  return in;
}

std::vector<std::string> derivation(const ConvReluResult& r) {
  std::vector<std::string> lines;
  for (const auto& e : r.staged.stats.log) {
    auto it = r.cell_labels.find(e.cell);
    const std::string label = it == r.cell_labels.end() ? "cell " + std::to_string(e.cell) : it->second;
    lines.push_back("run " + std::to_string(e.run) + ": " + label + " " + e.from + " -> " + e.to);
  }
  lines.push_back("runs = merges + 1 = " + std::to_string(r.staged.stats.merges) + " + 1 = " +
                  std::to_string(r.staged.stats.runs));
  return lines;
}

}  // namespace prophecy::nn
